use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fp::Precision;

/// A finite float as sign, stored mantissa and IEEE biased exponent.
///
/// `p = 0` is the subnormal range (no implicit one). Results of summation
/// may carry `p >= 2^e - 1` when the exact sum leaves the finite range;
/// those still describe a value, they just have no IEEE encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlainFloat {
    pub b: bool,
    pub v: u64,
    pub p: u64,
    pub e: u32,
    pub m: u32,
}

impl PlainFloat {
    pub fn zero(precision: Precision) -> Self {
        let (e, m) = precision.format();
        PlainFloat { b: false, v: 0, p: 0, e, m }
    }

    pub fn is_zero(&self) -> bool {
        self.v == 0 && self.p == 0
    }

    pub fn is_finite(&self) -> bool {
        self.p < (1u64 << self.e) - 1
    }

    pub fn from_f32(x: f32) -> Result<Self> {
        ieee_decode(x.to_bits() as u64, Precision::Single)
    }

    pub fn from_f64(x: f64) -> Result<Self> {
        ieee_decode(x.to_bits(), Precision::Double)
    }

    pub fn to_f32(&self) -> Result<f32> {
        if (self.e, self.m) != Precision::Single.format() {
            return Err(Error::InvalidParameter("not a binary32 value".into()));
        }
        Ok(f32::from_bits(ieee_encode(self)? as u32))
    }

    pub fn to_f64(&self) -> Result<f64> {
        match (self.e, self.m) {
            (11, 52) => Ok(f64::from_bits(ieee_encode(self)?)),
            (8, 23) => Ok(self.to_f32()? as f64),
            _ => Err(Error::InvalidParameter("no native type for this format".into())),
        }
    }
}

impl std::fmt::Display for PlainFloat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.to_f64() {
            Ok(x) => write!(f, "{x:e}"),
            Err(_) => write!(f, "({}, {:#x}, {})", self.b as u8, self.v, self.p),
        }
    }
}

/// Splits an IEEE pattern of the given precision. Inf and NaN are rejected.
pub fn ieee_decode(bits: u64, precision: Precision) -> Result<PlainFloat> {
    let (e, m) = precision.format();
    decode_format(bits, e, m)
}

pub(crate) fn decode_format(bits: u64, e: u32, m: u32) -> Result<PlainFloat> {
    let total = 1 + e + m;
    if total < 64 && bits >> total != 0 {
        return Err(Error::InvalidParameter(format!("pattern {bits:#x} wider than {total} bits")));
    }
    let v = bits & ((1u64 << m) - 1);
    let p = (bits >> m) & ((1u64 << e) - 1);
    if p == (1u64 << e) - 1 {
        return Err(Error::InvalidParameter("infinite or NaN input".into()));
    }
    Ok(PlainFloat { b: (bits >> (e + m)) & 1 == 1, v, p, e, m })
}

pub fn ieee_encode(x: &PlainFloat) -> Result<u64> {
    if x.e + x.m >= 64 || x.v >> x.m != 0 {
        return Err(Error::InvalidParameter("malformed float".into()));
    }
    if !x.is_finite() {
        return Err(Error::InvalidParameter("exponent outside the finite range".into()));
    }
    Ok(((x.b as u64) << (x.e + x.m)) | (x.p << x.m) | x.v)
}

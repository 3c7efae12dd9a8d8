use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Single,
    Double,
}

impl Precision {
    /// `(e, m)`: exponent and stored mantissa bits.
    pub fn format(self) -> (u32, u32) {
        match self {
            Precision::Single => (8, 23),
            Precision::Double => (11, 52),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Precision::Single => "single",
            Precision::Double => "double",
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" | "f32" | "binary32" => Ok(Precision::Single),
            "double" | "f64" | "binary64" => Ok(Precision::Double),
            _ => Err(Error::InvalidParameter(format!("unknown precision {s:?}"))),
        }
    }
}

impl std::fmt::Display for Precision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FpParams {
    pub e: u32,
    pub m: u32,
    pub w: u32,
    /// Share width, `2w`.
    pub k: u32,
    /// Superaccumulator blocks.
    pub alpha: u32,
    /// Nonzero blocks produced per converted input.
    pub beta: u32,
    pub gamma: u32,
    pub delta: u32,
    /// `w * beta`, the width the cost formulas are stated at.
    pub l: u32,
}

pub fn derive_params(precision: Precision, w: u32) -> Result<FpParams> {
    let (e, m) = precision.format();
    FpParams::new(e, m, w)
}

impl FpParams {
    pub fn new(e: u32, m: u32, w: u32) -> Result<Self> {
        if w != 16 && w != 32 {
            return Err(Error::InvalidParameter(format!("unsupported block width w = {w}")));
        }
        if !(2..=15).contains(&e) || !(1..=63).contains(&m) {
            return Err(Error::InvalidParameter(format!("unsupported format e = {e}, m = {m}")));
        }
        let alpha = ((1u32 << e) + m).div_ceil(w);
        let beta = (m + 1).div_ceil(w) + 1;
        let params = FpParams {
            e,
            m,
            w,
            k: 2 * w,
            alpha,
            beta,
            gamma: w.trailing_zeros(),
            delta: ceil_log2(alpha),
            l: w * beta,
        };
        if params.max_high() + beta > alpha || alpha <= beta {
            return Err(Error::InvalidParameter("exponent range does not fit the accumulator".into()));
        }
        if params.norm_width() > 128 {
            return Err(Error::InvalidParameter("normalization width exceeds 128 bits".into()));
        }
        Ok(params)
    }

    /// IEEE exponent bias.
    pub fn bias(&self) -> i64 {
        (1i64 << (self.e - 1)) - 1
    }

    /// Largest finite biased exponent.
    pub fn max_exponent(&self) -> u64 {
        (1u64 << self.e) - 2
    }

    /// Largest block offset an input can be written at.
    fn max_high(&self) -> u32 {
        ((self.max_exponent() - 1) >> self.gamma) as u32
    }

    /// Width of the normalization ring: the `beta` window doubled plus a sign bit.
    pub fn norm_width(&self) -> u32 {
        self.w * self.beta + 2
    }

    /// Largest number of accumulators one regularizing sum may take.
    pub fn layer_capacity(&self) -> usize {
        1usize << (self.w - 2)
    }

    /// Position of the implicit leading one inside the top mantissa block.
    pub(crate) fn implicit_bit(&self) -> u32 {
        self.m - self.w * (self.beta - 2)
    }
}

pub(crate) fn ceil_log2(x: u32) -> u32 {
    if x <= 1 {
        0
    } else {
        32 - (x - 1).leading_zeros()
    }
}

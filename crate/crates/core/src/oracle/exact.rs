use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::codec::PlainFloat;
use crate::error::{Error, Result};

fn pow2(exp: i64) -> BigRational {
    let one = BigInt::one();
    if exp >= 0 {
        BigRational::from_integer(one << exp as u64)
    } else {
        BigRational::new(one.clone(), one << (-exp) as u64)
    }
}

fn bias(e: u32) -> i64 {
    (1i64 << (e - 1)) - 1
}

// Signed integer significand and binary exponent of `x`.
fn dyadic(x: &PlainFloat) -> (BigInt, i64) {
    let mant = if x.p > 0 { (1u64 << x.m) | x.v } else { x.v };
    let exp = (x.p.max(1) as i64) - bias(x.e) - x.m as i64;
    let n = BigInt::from(mant);
    (if x.b { -n } else { n }, exp)
}

/// The exact value of `x` as a rational.
pub fn to_rational(x: &PlainFloat) -> BigRational {
    let (n, exp) = dyadic(x);
    BigRational::from_integer(n) * pow2(exp)
}

/// Exact sum. An empty input sums to zero.
pub fn exact_sum(xs: &[PlainFloat]) -> BigRational {
    let parts: Vec<(BigInt, i64)> = xs.iter().map(dyadic).collect();
    let Some(low) = parts.iter().map(|d| d.1).min() else {
        return BigRational::zero();
    };
    let total: BigInt = parts.into_iter().map(|(n, exp)| n << (exp - low) as u64).sum();
    BigRational::from_integer(total) * pow2(low)
}

/// Rounds toward zero onto `m` stored mantissa bits. The exponent is
/// unbounded above, so sums beyond the finite range stay representable.
pub fn truncate_rational(q: &BigRational, e: u32, m: u32) -> PlainFloat {
    let zero = PlainFloat { b: false, v: 0, p: 0, e, m };
    if q.is_zero() {
        return zero;
    }
    let a = q.abs();
    let mut t = a.numer().bits() as i64 - a.denom().bits() as i64;
    if a < pow2(t) {
        t -= 1;
    }
    debug_assert!(a >= pow2(t) && a < pow2(t + 1));
    let floor_scaled = |s: i64| -> u64 {
        let x = (&a * pow2(-s)).floor().to_integer();
        u64::try_from(x).expect("mantissa fits")
    };
    let p = t + bias(e);
    let (v, p) = if p >= 1 {
        (floor_scaled(t - m as i64) - (1u64 << m), p as u64)
    } else {
        (floor_scaled(1 - bias(e) - m as i64), 0)
    };
    PlainFloat { b: q.is_negative(), v, p, ..zero }
}

/// Expands every input to a common fixed-point integer, adds, and
/// truncates back.
pub fn expand_and_sum(xs: &[PlainFloat]) -> Result<PlainFloat> {
    let first = xs.first().ok_or_else(|| Error::InvalidParameter("empty input".into()))?;
    let (e, m) = (first.e, first.m);
    let mut total = BigInt::zero();
    for x in xs {
        if (x.e, x.m) != (e, m) {
            return Err(Error::InvalidParameter("mixed formats".into()));
        }
        total += expand(x);
    }
    Ok(from_scaled(&total, e, m))
}

/// `x` in units of the smallest subnormal.
pub(crate) fn expand(x: &PlainFloat) -> BigInt {
    let y = if x.p == 0 {
        BigInt::from(x.v)
    } else {
        BigInt::from((1u64 << x.m) | x.v) << (x.p - 1)
    };
    if x.b {
        -y
    } else {
        y
    }
}

/// Inverse of [`expand`], truncating surplus low bits.
pub(crate) fn from_scaled(y: &BigInt, e: u32, m: u32) -> PlainFloat {
    let mag = y.magnitude();
    let bits = mag.bits();
    let b = y.sign() == Sign::Minus;
    if bits <= m as u64 {
        let v = mag.iter_u64_digits().next().unwrap_or(0);
        return PlainFloat { b, v, p: 0, e, m };
    }
    let p = bits - m as u64;
    let top = mag >> (p - 1);
    let v = top.iter_u64_digits().next().unwrap_or(0) - (1u64 << m);
    PlainFloat { b, v, p, e, m }
}

//! Seeded input generators.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::codec::{ieee_decode, PlainFloat};
use crate::fp::Precision;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    /// Uniform bit patterns, non-finite ones redrawn.
    Uniform,
    /// Values and their negations with a few small survivors, shuffled.
    Cancellation,
    /// Exponents drawn from the extremes and the middle of the range.
    WideExponent,
    /// Exponents within a few octaves of one.
    Moderate,
}

impl Generator {
    pub const ALL: [Generator; 4] =
        [Generator::Uniform, Generator::Cancellation, Generator::WideExponent, Generator::Moderate];

    pub fn name(self) -> &'static str {
        match self {
            Generator::Uniform => "uniform",
            Generator::Cancellation => "cancellation",
            Generator::WideExponent => "wide-exponent",
            Generator::Moderate => "moderate",
        }
    }
}

impl std::str::FromStr for Generator {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        Generator::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| crate::Error::InvalidParameter(format!("unknown generator {s:?}")))
    }
}

pub fn random_finite<R: Rng + ?Sized>(rng: &mut R, precision: Precision) -> PlainFloat {
    let (e, m) = precision.format();
    let mask = if e + m + 1 == 64 { u64::MAX } else { (1u64 << (e + m + 1)) - 1 };
    loop {
        if let Ok(x) = ieee_decode(rng.gen::<u64>() & mask, precision) {
            return x;
        }
    }
}

fn with_exponent<R: Rng + ?Sized>(rng: &mut R, precision: Precision, p: u64) -> PlainFloat {
    let (e, m) = precision.format();
    PlainFloat { b: rng.gen(), v: rng.gen::<u64>() & ((1u64 << m) - 1), p, e, m }
}

pub fn generate<R: Rng + ?Sized>(
    rng: &mut R,
    generator: Generator,
    precision: Precision,
    n: usize,
) -> Vec<PlainFloat> {
    let (e, _) = precision.format();
    let max_p = (1u64 << e) - 2;
    let bias = (1u64 << (e - 1)) - 1;
    match generator {
        Generator::Uniform => (0..n).map(|_| random_finite(rng, precision)).collect(),
        Generator::Cancellation => {
            let mut xs = Vec::with_capacity(n);
            while xs.len() + 1 < n {
                let x = random_finite(rng, precision);
                xs.push(x);
                xs.push(PlainFloat { b: !x.b, ..x });
            }
            while xs.len() < n {
                let p = rng.gen_range(0..=bias / 2);
                xs.push(with_exponent(rng, precision, p));
            }
            xs.shuffle(rng);
            xs
        }
        Generator::WideExponent => {
            let choices = [0, 1, 2, bias, bias + 1, max_p - 1, max_p];
            (0..n)
                .map(|_| {
                    let p = *choices.choose(rng).unwrap();
                    with_exponent(rng, precision, p)
                })
                .collect()
        }
        Generator::Moderate => {
            (0..n)
                .map(|_| {
                    let p = rng.gen_range(bias - 8..=bias + 8);
                    with_exponent(rng, precision, p)
                })
                .collect()
        }
    }
}

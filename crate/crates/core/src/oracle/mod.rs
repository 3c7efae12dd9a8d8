//! Plaintext ground truth.
//!
//! [`codec`] maps IEEE bit patterns to `(b, v, p)` triples, [`superacc`]
//! mirrors every secure protocol on ordinary integers, and [`exact`] sums
//! with arbitrary-precision rationals. [`gen`] holds the seeded input
//! generators shared by tests and benchmarks.

pub mod codec;
pub mod exact;
pub mod gen;
pub mod superacc;

pub use codec::{ieee_decode, ieee_encode, PlainFloat};
pub use exact::{exact_sum, expand_and_sum, truncate_rational};
pub use superacc::{
    plain_fl2sa, plain_layered_sum, plain_normalize, plain_pipeline, plain_regularize,
    plain_sa2fl, plain_sasum, plain_shift, PlainSuperacc,
};

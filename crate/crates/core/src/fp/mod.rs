//! Floating-point summation on shares.
//!
//! A float enters as sign, mantissa blocks and IEEE biased exponent. FL2SA
//! places the signed mantissa into an `alpha`-block superaccumulator,
//! SASum adds accumulators blockwise and regularizes with one carry step,
//! and SA2FL picks the `beta` leading blocks and normalizes them. Remainder
//! bits below the chosen window are folded in as a sticky sign so that
//! the final truncation is exact.

mod convert;
mod extract;
mod params;
mod sum;
mod types;

pub use convert::{b2u, fl2sa, shift};
pub use extract::{normalize, sa2fl};
pub use params::{derive_params, FpParams, Precision};
pub use sum::{flsum, flsum_segments, layered_sum, sasum, sasum_groups, sasum_ranges};
pub use types::{
    open_floats, open_superaccs, reconstruct_floats, reconstruct_superaccs, share_floats, share_superaccs,
    FloatShared, SuperaccShared,
};

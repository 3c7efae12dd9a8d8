//! Three-party secure summation of IEEE 754 floating-point numbers.
//!
//! Inputs are secret-shared among three parties with replicated secret
//! sharing over `Z_{2^k}`, converted into a blocked fixed-point
//! "superaccumulator" representation, summed exactly, and converted back
//! into a floating-point value. Everything is evaluated in batches so that
//! a round of communication carries all independent work.
//!
//! Module map:
//!
//! * [`ring`]: ring elements, sharings, bit-sliced boolean batches, PRGs
//! * [`runtime`]: party contexts, transports, cost metering
//! * [`primitives`]: multiplication, opening, B2A, random bits, edaBits
//! * [`circuit`]: prefix and tree circuits over `Z_2`
//! * [`blocks`]: comparisons, truncation, bit decomposition and friends
//! * [`fp`]: the floating-point summation protocols
//! * [`oracle`]: plaintext reference pipeline and exact rational sums
//! * [`cost`]: closed-form cost models

pub mod blocks;
pub mod circuit;
pub mod cost;
mod error;
pub mod fp;
pub mod oracle;
pub mod primitives;
pub mod ring;
pub mod runtime;

pub use error::{Error, Result};

//! Benchmark and correctness harness for secure floating-point summation.
//!
//! Every benchmark run is also a correctness run: each opened result is
//! compared with the plaintext pipeline and the exact rational sum, and a
//! mismatch aborts the run.

pub mod config;
pub mod report;
pub mod runner;

pub use config::{parse_endpoints, BenchConfig, TransportKind};
pub use report::{emit_report, BenchKind, BenchRecord, Format, Phase, PhaseStat, SCHEMA_VERSION};
pub use runner::{check_sum, run_b2a_bench, run_cost_report, run_flsum_bench, secure_sum, selftest, trial_inputs};

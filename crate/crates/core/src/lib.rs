//! Quality monitoring for online A/B tests.
//!
//! Two checks run against every live experiment:
//!
//! * [`validate`]: in-flight randomization validation. Bucket counts produced
//!   by hash-mod assignment are tested for a uniform multinomial split with
//!   the `PSI_k` test, alongside Pearson chi-square, Kolmogorov-Smirnov and
//!   Anderson-Darling baselines.
//! * [`srm`]: sample ratio mismatch detection on cumulative test/control
//!   counts using a pair of one-sided sequential probability ratio tests,
//!   with z-test and chi-square baselines.
//!
//! [`sim`] generates labeled benchmark data, [`eval`] scores detectors on
//! it, and [`cli`] wires everything into the `abguard` binary.

pub mod cli;
pub mod error;
mod serde_float;
pub mod eval;
pub mod sim;
pub mod srm;
pub mod stats;
pub mod validate;

pub use error::{Error, Result};

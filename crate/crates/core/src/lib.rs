//! Pair correlation of dilated lacunary sequences modulo one.
//!
//! The crate computes `R2(f, N)` for the points `{alpha * a(x)}`, its Fourier
//! reconstruction through Weyl sums, Monte Carlo averages over `alpha`, and
//! exact counts for the Diophantine conditions that control the mean and
//! variance of the statistic.

pub mod bigreal;
pub mod cli;
pub mod diophantine;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod paircorr;
pub mod precision;
pub mod quad;
pub mod sequences;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};

//! Douglas-Rachford splitting laboratory.
//!
//! Resolvent and proximal oracles, the relaxed, composite and accelerated
//! Douglas-Rachford iterations, closed-form convergence bounds, worst-case
//! instances, numeric checks of proof certificates, and a harness that ties
//! them together (used by the `splitlab` binary).

pub mod algorithms;
pub mod certificates;
pub mod cli;
pub mod error;
pub mod harness;
pub mod instances;
pub mod operators;
pub mod rates;
pub mod rng;

pub use error::{Result, SplitError};

/// Dense real coordinate vector; the iterate type everywhere.
pub type Vector = nalgebra::DVector<f64>;
/// Dense real matrix.
pub type Matrix = nalgebra::DMatrix<f64>;

/// The silver ratio `1 + sqrt(2)`.
pub const SILVER_RATIO: f64 = 1.0 + std::f64::consts::SQRT_2;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(SplitError::DimensionMismatch { expected, got })
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        Err(SplitError::InvalidParameter(format!(
            "stepsize gamma must be positive, got {gamma}"
        )))
    }
}

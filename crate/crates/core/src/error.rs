//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation precondition was violated.
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    /// Two objects built against different bases were combined.
    #[error("basis mismatch: expected id {expected:#018x}, found {found:#018x}")]
    BasisMismatch { expected: u64, found: u64 },

    /// An exponent formula has a vanishing denominator at these parameters.
    #[error("degenerate exponent parameters: {0}")]
    DegenerateParameters(String),

    /// A quadrature evaluation produced a non-finite value.
    #[error("non-finite value at grid node {node} ({context})")]
    NonFinite { node: usize, context: String },

    /// The lagged-diffusivity iteration failed even after time-step halving.
    #[error(
        "Picard iteration failed at t = {t}: dt floor {dt_floor} reached, \
         last change {last_change} (tol {tol}) after {iterations} iterations"
    )]
    PicardFailure {
        t: f64,
        dt_floor: f64,
        last_change: f64,
        tol: f64,
        iterations: usize,
    },

    /// The elliptic continuation stalled above the requested residual.
    #[error("elliptic Picard stagnation: residual {residual} above tol {tol}")]
    PicardStagnation { residual: f64, tol: f64 },

    /// A time series did not satisfy the preconditions of a measurement.
    #[error("invalid series `{name}`: {message}")]
    InvalidSeries { name: &'static str, message: String },

    /// Report or artifact serialization failed.
    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            message: message.into(),
        }
    }
}

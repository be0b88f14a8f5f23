use thiserror::Error;

use crate::Vector;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("missing oracle: {0}")]
    MissingOracle(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An iterative routine produced a non-finite or runaway iterate.
    /// `last` is the last iterate that was still finite and bounded.
    #[error("iteration diverged at step {step}")]
    Diverged { step: usize, last: Vector },

    /// A certified subproblem solve ran out of iterations before the
    /// duality gap reached the requested tolerance.
    #[error("subproblem budget exceeded: gap {gap:.3e} > tolerance {tolerance:.3e}")]
    BudgetExceeded { gap: f64, tolerance: f64 },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serialization(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

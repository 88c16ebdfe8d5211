use thiserror::Error;

/// Errors raised by operators, line search and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line search exhausted after {max_backtracks} backtracks (last step {last_step:e})")]
    BacktrackExhausted { max_backtracks: u32, last_step: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFiniteIterate(&'static str),

    #[error("iterate norm {norm:e} exceeded divergence threshold")]
    Diverged { norm: f64 },

    #[error("trace too short for rate estimate: {got} iterations, need at least {need}")]
    InsufficientTrace { got: usize, need: usize },

    #[error("residual sequence contains a non-positive value at k = {0}")]
    NonPositiveResidual(usize),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("malformed input: {0}")]
    Format(String),
}

impl From<std::io::Error> for SolverError {
    fn from(e: std::io::Error) -> Self {
        SolverError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SolverError>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(SolverError::DimensionMismatch { expected, got });
    }
    Ok(())
}

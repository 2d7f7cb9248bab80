use thiserror::Error;

/// Errors produced by the optimizer library and the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in component {component}: {value}")]
    NonFinite { component: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("objective evaluation failed: {0}")]
    Objective(String),

    #[error("objective failed at probe {probe}: {source}")]
    Probe {
        probe: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("fit did not converge after {iterations} iterations (residual sum of squares {rss:e})")]
    FitFailed { iterations: usize, rss: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

use thiserror::Error;

/// Errors raised by geometry, transport and flow routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("eigensolver did not converge (residual {residual:e})")]
    NumericFailure { residual: f64 },

    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("matrix is ill-conditioned: smallest eigenvalue {min:e}, largest {max:e}")]
    IllConditioned { min: f64, max: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("descriptor mismatch: {0}")]
    DescriptorMismatch(String),

    #[error("{what} is not supported on {kind}")]
    Unsupported { kind: &'static str, what: &'static str },

    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    #[error("degenerate direction: {0}")]
    DegenerateDirection(String),

    #[error("numeric divergence: {0}")]
    Divergence(String),

    #[error("flow diverged at step {step}: {reason}")]
    FlowDivergence { step: usize, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty measure")]
    EmptyMeasure,
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("constraint violation: {what} (residual {residual:.3e}, tolerance {tolerance:.3e})")]
    ConstraintViolation {
        what: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("unsupported dimension d = {0}")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{method} did not converge: {detail}")]
    NonConvergence { method: &'static str, detail: String },

    #[error("truncation insufficient: {0}")]
    CutoffInsufficient(String),

    #[error("exponent overflow: {0}")]
    Overflow(String),

    #[error("quadrature failure: {0}")]
    Quadrature(String),
}

pub type Result<T> = std::result::Result<T, Error>;

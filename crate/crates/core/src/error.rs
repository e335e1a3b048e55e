use thiserror::Error;

/// Errors raised by the double-form engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degree {p} is out of range for dimension {n}")]
    Domain { n: usize, p: usize },

    #[error("dimension {0} exceeds the supported maximum")]
    DimensionTooLarge(usize),

    #[error("malformed multi-index {indices:?}: {reason}")]
    MalformedIndex { indices: Vec<usize>, reason: String },

    #[error("duplicate coefficient for ({left:?}; {right:?})")]
    DuplicateKey { left: Vec<usize>, right: Vec<usize> },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("cannot contract a ({p},{q}) double form {k} times")]
    DegreeUnderflow { p: usize, q: usize, k: usize },

    #[error("expected {expected} vectors of length {n}, got {got}")]
    VectorMismatch { expected: usize, n: usize, got: String },

    #[error("double form is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("double form is not divisible by the metric (relative residual {residual:e})")]
    NotDivisible { residual: f64 },

    #[error("first Bianchi identity violated (residual {0:e})")]
    Bianchi(f64),

    #[error("frame is not orthonormal (Gram deviation {0:e})")]
    NonOrthonormalFrame(f64),

    #[error("invalid parameters: {0}")]
    InvalidParameter(String),

    #[error("dense tensor with {0} entries exceeds the oracle size guard")]
    SizeOverflow(u128),
}

pub type Result<T> = std::result::Result<T, Error>;

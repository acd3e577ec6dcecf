use thiserror::Error;

/// Errors raised by the deformation and modular machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("generators do not commute (commutator norm {0:.3e})")]
    NonCommuting(f64),

    #[error("vector is not normalized (norm {0:.6})")]
    NotUnitVector(f64),

    #[error("matrix is not skew-symmetric with respect to the form (deviation {0:.3e})")]
    NotSkew(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("dimension cap exceeded: {dim} > {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("malformed input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;

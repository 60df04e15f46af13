use thiserror::Error;

/// Errors produced by geometry construction, overlap evaluation, the OCP
/// layer, the solver, and scenario handling.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two objects that must share a dimension do not.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A shape matrix failed the symmetry check at construction.
    #[error("matrix is not symmetric (relative asymmetry {0:.3e})")]
    NotSymmetric(f64),

    /// A shape matrix failed the positive-definiteness check at construction.
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    /// A numerical routine produced a non-finite or otherwise unusable value.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A scenario file is syntactically valid JSON but semantically invalid.
    #[error("invalid scenario: {0}")]
    Scenario(String),

    /// A scenario file could not be parsed; carries line/column diagnostics.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised while building or combining states, operators and ensembles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("layout has no factors")]
    EmptyLayout,
    #[error("duplicate factor label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown factor label `{0}`")]
    UnknownLabel(String),
    #[error("factor `{label}` has dimension {dim}; only qubit factors are supported")]
    NonQubitFactor { label: String, dim: usize },
    #[error("space of dimension {dim} exceeds the supported maximum {max}")]
    TooLarge { dim: usize, max: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("layout mismatch: {left} vs {right}")]
    LayoutMismatch { left: String, right: String },
    #[error("state is not normalized (norm = {0})")]
    NotNormalized(f64),
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("not a density matrix: {0}")]
    InvalidDensity(String),
    #[error("partial trace needs at least one factor to keep")]
    EmptyKeepSet,
    #[error("pointer factor `{0}` is not in its ready state")]
    PointerNotReady(String),
    #[error("restriction onto `{0}` is not diagonal in the pointer basis")]
    NotPointerDiagonal(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

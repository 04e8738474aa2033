use alloc::string::String;

/// Errors shared by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoreError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("kernel family {family} has no spectral density")]
    UnsupportedFamily { family: &'static str },

    #[error("degenerate leverage profile: {0}")]
    DegenerateProfile(&'static str),

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { pivot: f64, index: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = core::result::Result<T, CoreError>;

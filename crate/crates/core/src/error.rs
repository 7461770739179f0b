use alloc::string::String;

/// Errors produced by the core toolkit.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("mode index {index} out of range for {mode_count} modes")]
    ModeOutOfRange { index: usize, mode_count: usize },

    #[error("mode count mismatch: {left} vs {right}")]
    ModeMismatch { left: usize, right: usize },

    #[error("Hilbert-space dimension {requested} exceeds the limit {limit}")]
    DimensionOverflow { requested: u128, limit: usize },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("amplitude vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("states live in different truncated spaces")]
    IncompatibleSpace,

    #[error("ensemble weights invalid: {0}")]
    InvalidWeights(String),

    #[error("ensemble members {0} and {1} are not orthogonal (overlap {2})")]
    NotOrthonormal(usize, usize, f64),

    #[error("operator is not Hermitian")]
    NotHermitian,

    #[error("operator acts on modes other than mode {mode}")]
    NonLocal { mode: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("norm drift {drift:e} exceeds tolerance {tol:e}")]
    NormDrift { drift: f64, tol: f64 },

    #[error("observables did not converge before the dimension cap (last cutoff {cutoff}, relative change {change:e})")]
    NonConvergence { cutoff: usize, change: f64 },

    #[error("measurement variance {variance:e} is degenerate")]
    DegenerateMeasurement { variance: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

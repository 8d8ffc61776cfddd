use thiserror::Error;

/// Errors raised anywhere in the decomposition pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("column {0} has zero variance and cannot be normalized")]
    ConstantColumn(usize),

    #[error("singular value too small ({0:e}); left vector undefined")]
    ZeroSingularValue(f64),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state norm {norm} left [0.5, 2] at step {step}; time step too large")]
    NormBlowup { step: usize, norm: f64 },

    #[error("annealing did not converge for component {component}: best residual {best_residual:e}")]
    NotConverged {
        component: usize,
        best_residual: f64,
    },

    #[error("negative discriminant {0:e} in two-level energy")]
    NegativeDiscriminant(f64),

    #[error("two-level eigenvector is ill-conditioned at x = {0}")]
    IllConditioned(f64),

    #[error("overlap alpha = {0} makes the gap formula degenerate")]
    DegenerateOverlap(f64),

    #[error("series tail norm {tail_norm:e} above threshold after {order} terms")]
    TruncationNotReached { order: usize, tail_norm: f64 },

    #[error("T * Hbound = {0} is outside the usable series range (<= 30)")]
    SeriesOutOfRange(f64),

    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("power iteration did not converge in {iterations} iterations (residual {residual:e})")]
    MaxIterExceeded { iterations: usize, residual: f64 },

    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),

    #[error("PGM raster truncated: expected {expected} samples, found {found}")]
    TruncatedPixels { expected: usize, found: usize },

    #[error("unsupported magic number {0:?}")]
    UnsupportedMagic(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

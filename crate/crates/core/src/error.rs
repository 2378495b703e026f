use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid array geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("covariance violates the power constraint (trace {trace})")]
    PowerConstraint { trace: f64 },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("domain restriction is degenerate: no admissible angle after {draws} draws")]
    DegenerateRestriction { draws: u64 },

    #[error("channel has no nonzero singular value; water level undefined")]
    ZeroChannel,

    #[error("constellation enumeration too large: M = {0} exceeds 6")]
    ConstellationTooLarge(usize),

    #[error("input is not a truncated channel: nonzero entry at ({row}, {col})")]
    NotTruncated { row: usize, col: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

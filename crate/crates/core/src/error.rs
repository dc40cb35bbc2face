use thiserror::Error;

#[derive(Debug, Error)]
pub enum CalcError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("degree ladder violated: component {index} has degree {found}, expected {expected}")]
    DegreeLadder { index: usize, found: String, expected: String },
    #[error("nonzero log obstruction {value:e} at critical degree {degree}")]
    LogObstruction { degree: String, value: f64 },
    #[error("truncation depth {depth} too small: need at least {required}")]
    TruncationTooSmall { depth: usize, required: f64 },
    #[error("insufficient derivative data at 0: need order {needed}, have {available}")]
    MissingJet { needed: usize, available: usize },
    #[error("operator is not transversally elliptic: {0}")]
    NotElliptic(String),
    #[error("contour meets the spectrum: {0}")]
    Contour(String),
    #[error("invalid chart change: {0}")]
    InvalidChart(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("not Hermitian: defect {0:e}")]
    NotHermitian(f64),
    #[error("fit failure: {0}")]
    Fit(String),
    #[error("power iteration did not converge after {iterations} iterations (last estimate {estimate})")]
    NoConvergence { iterations: usize, estimate: f64 },
    #[error("serialization: {0}")]
    Serialization(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CalcError>;

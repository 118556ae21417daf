use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("edge spill: {0}")]
    EdgeSpill(String),

    #[error("state not normalized: norm^2 = {0}")]
    NotNormalized(f64),

    #[error("not a density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("zero-probability measurement outcome: class {0}")]
    ZeroProbabilityOutcome(usize),

    #[error("resource guard: {0}")]
    ResourceGuard(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Failure modes shared by every numerical module and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("divergence: {0}")]
    Divergence(String),
    #[error("accuracy not reached: {0}")]
    Accuracy(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("point outside the light cone: {0}")]
    OutsideCone(String),
    #[error("missing derivative data: {0}")]
    Capability(String),
    #[error("instability: {0}")]
    Instability(String),
    #[error("ill-conditioned fit: {0}")]
    Fit(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by bad input rather than by a numerical failure.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Shape(_) | Error::Domain(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

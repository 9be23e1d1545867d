use thiserror::Error;

/// Errors reported by the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("evaluation error: {0}")]
    Evaluation(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid Young function: {0}")]
    InvalidYoung(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("mountain-pass geometry not found: {0}")]
    GeometryFailure(String),
    #[error("path degenerated: {0}")]
    DegeneratePath(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

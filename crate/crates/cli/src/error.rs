use metric_scale::GeometryError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Args(clap::Error),

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Geometry(#[from] GeometryError),

    /// The computation ran but did not succeed; partial output may still be written.
    #[error("{0}")]
    Failed(String),

    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Args(e) => e.exit_code(),
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("missing input: {0}")]
    MissingInput(String),
    /// Outputs were written but at least one gate failed.
    #[error("failing gates: {0}")]
    GatesFailed(String),
    #[error(transparent)]
    Core(#[from] ilrd_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::MissingInput(_) => 1,
            _ => 2,
        }
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Runtime(#[from] sst_core::Error),

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for usage and configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Runtime(sst_core::Error::Capacity { .. }) => 2,
            CliError::Runtime(sst_core::Error::Config(_)) => 2,
            CliError::Runtime(_) | CliError::Io { .. } => 1,
        }
    }
}

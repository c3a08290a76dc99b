use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_VIOLATION: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] mdd_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),

    /// Output was written, but a verifier found a violation.
    #[error("verification failed: {0}")]
    Violation(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> u8 {
        use mdd_core::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            // Bad values slip past the schema and are caught by the core.
            CliError::Core(E::Argument(_) | E::Parse { .. } | E::Dimension { .. }) => EXIT_CONFIG,
            CliError::Violation(_) => EXIT_VIOLATION,
            _ => EXIT_FAILURE,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

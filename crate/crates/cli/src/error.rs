use std::path::PathBuf;

use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("missing dependency {}: {reason}", path.display())]
    Dependency { path: PathBuf, reason: String },

    #[error("constraint gate failed: {0}")]
    Gate(String),

    #[error("{0}")]
    Run(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn dependency(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        CliError::Dependency {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Dependency { .. } => 3,
            CliError::Gate(_) => 4,
            CliError::Run(_) => 1,
        }
    }
}

impl From<navislim::Error> for CliError {
    fn from(e: navislim::Error) -> Self {
        match e {
            navislim::Error::Config(msg) => CliError::Config(msg),
            navislim::Error::Constraint(msg) => CliError::Gate(msg),
            navislim::Error::Load { path, reason } => CliError::Dependency { path, reason },
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

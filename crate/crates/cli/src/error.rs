use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical abort: {message}{}", snapshot.as_ref().map(|p| format!(" (state snapshot: {})", p.display())).unwrap_or_default())]
    Numerical { message: String, snapshot: Option<PathBuf> },

    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io(_) => 4,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl From<edgereg::Error> for CliError {
    fn from(e: edgereg::Error) -> Self {
        match e {
            edgereg::Error::Numerical { .. } => CliError::Numerical {
                message: e.to_string(),
                snapshot: None,
            },
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

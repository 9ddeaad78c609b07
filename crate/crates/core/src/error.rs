use thiserror::Error;

/// Errors raised by the model, samplers and posterior summaries.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {message}")]
    Numerical {
        message: String,
        /// Free-form diagnostics (condition estimates, offending values).
        diagnostics: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("undefined quantity: {0}")]
    Undefined(String),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>, diagnostics: impl Into<String>) -> Self {
        Error::Numerical {
            message: msg.into(),
            diagnostics: diagnostics.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

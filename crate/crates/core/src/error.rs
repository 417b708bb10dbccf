use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A model, channel or configuration parameter is outside its domain.
    #[error("invalid parameter `{field}`: {reason}")]
    Parameter { field: &'static str, reason: String },

    /// A policy asked for something the state machine does not allow.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("terminal {terminal} has {deliveries} deliveries, need at least {required}")]
    InsufficientSamples {
        terminal: usize,
        deliveries: u64,
        required: u64,
    },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("encoding error: {0}")]
    Encoding(String),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            field,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Encoding(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Encoding(e.to_string())
    }
}

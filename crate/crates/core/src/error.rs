use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("estimator state: {0}")]
    State(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Short machine-parsable category, used as the CLI error prefix.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::Parse { .. } => "parse",
            Error::Data(_) => "data",
            Error::Calibration(_) => "calibration",
            Error::Protocol(_) => "protocol",
            Error::State(_) => "state",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}

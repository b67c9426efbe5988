use thiserror::Error;

/// Errors surfaced by the simulator and harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A structurally invalid configuration (bad key width, bad geometry, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// An invalid argument to an operation (zero samples, empty input, ...).
    #[error("argument error: {0}")]
    Argument(String),

    /// Input data that could not be parsed (config files, test vectors, CSV).
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}

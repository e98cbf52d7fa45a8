use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("generation failure: {0}")]
    GenerationFailure(String),

    #[error("simulation diverged at step {step}")]
    SimulationDiverged { step: usize },

    /// Invalid configuration. `pointer` is a JSON pointer to the offending key.
    #[error("config error at `{pointer}`: {message}")]
    Config { pointer: String, message: String },

    #[error("stage order error: {0}")]
    StageOrder(String),

    #[error("parse error in {location}: {message}")]
    Parse { location: String, message: String },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            pointer: pointer.into(),
            message: message.into(),
        }
    }
}

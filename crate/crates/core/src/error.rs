use std::path::PathBuf;

use crate::metrics::FitParams;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An invalid parameter. `key` is the dotted path of the offending
    /// setting when it came from a config file.
    #[error("configuration error at `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("parse error in {path} at byte {offset}: {msg}")]
    Parse { path: PathBuf, offset: u64, msg: String },

    #[error("index out of bounds: {0}")]
    Bounds(String),

    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),

    #[error("first-order detection failed: {0}")]
    Detection(String),

    #[error("insufficient fringe: {0}")]
    InsufficientFringe(String),

    /// The optimiser stopped without meeting its tolerance. The best
    /// parameters it reached are kept so callers can still inspect them.
    #[error("fringe fit did not converge after {iterations} iterations")]
    Fit {
        params: Box<FitParams>,
        residual_rms: f64,
        iterations: usize,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::Data(_) | Error::Parse { .. } | Error::Bounds(_) => 3,
            Error::UndefinedStatistic(_)
            | Error::Detection(_)
            | Error::InsufficientFringe(_)
            | Error::Fit { .. } => 4,
            Error::Io { .. } => 1,
        }
    }
}

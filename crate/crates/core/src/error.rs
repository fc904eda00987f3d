use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time grid is not strictly increasing at index {index}")]
    NonMonotoneGrid { index: usize },

    #[error("time {t} lies outside [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("integration failed at t = {t} (h = {h:e}, {steps} steps): {reason}")]
    Integration {
        t: f64,
        h: f64,
        steps: usize,
        reason: &'static str,
    },

    #[error("degenerate least-squares problem: {0}")]
    DegenerateFit(String),

    #[error("config error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("failed to parse config: {0}")]
    ConfigParse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(key: &str, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

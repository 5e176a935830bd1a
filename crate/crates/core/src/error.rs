use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("camera array spans {span} px but the image is {image_size} px (need image_size >= {required})")]
    Geometry {
        span: f64,
        image_size: usize,
        required: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("ill-conditioned system (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("non-finite value encountered at step {step}")]
    NonFinite { step: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures that come from the numerics rather than from the
    /// caller's input or the filesystem.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::IllConditioned { .. } | Error::NonFinite { .. })
    }
}

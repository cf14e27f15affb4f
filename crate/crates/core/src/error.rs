use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the phasemotion library.
#[derive(Debug, Error)]
pub enum Error {
    /// Array or image sizes are inconsistent or below a required minimum.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A frame sequence is malformed (mixed sizes, too short).
    #[error("sequence error: {0}")]
    Sequence(String),

    /// A parameter or input value is outside its domain.
    #[error("validation error: {0}")]
    Validation(String),

    /// A metric is mathematically undefined for the given input (0/0).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// Too few reliable pixels to produce an estimate.
    #[error("insufficient signal: {0}")]
    InsufficientSignal(String),

    /// A binary or text file does not follow the expected layout.
    #[error("format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec error on {path}: {source}")]
    Codec {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("channel index {index} out of range for {channels}-channel image")]
    ChannelIndex { index: usize, channels: usize },

    #[error("unsupported channel count {0} (expected 1 or 3)")]
    Channels(usize),

    #[error("invalid kernel: {0}")]
    Kernel(String),

    #[error("kernel domain error: {0}")]
    Domain(String),

    #[error("singular base {base:e} for polynomial degree {degree}")]
    SingularBase { base: f64, degree: f64 },

    #[error("coupled image rule does not match image: {0}")]
    CoupleMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: unsupported image format ({detail})")]
    UnsupportedFormat { path: PathBuf, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

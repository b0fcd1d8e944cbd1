use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: invalid JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    /// A file exists but its bytes do not follow the expected layout.
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },

    /// Decoded data violates a structural invariant (run sums, value ranges).
    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("dimension mismatch: expected {expected_h}x{expected_w}, got {got_h}x{got_w}")]
    DimensionMismatch {
        expected_h: usize,
        expected_w: usize,
        got_h: usize,
        got_w: usize,
    },

    /// A manifest entity failed validation on load.
    #[error("clip '{clip}': {reason}")]
    InvalidClip { clip: String, reason: String },

    #[error("clip '{clip}': unknown object id {id}")]
    UnknownObject { clip: String, id: u32 },

    #[error("clip '{clip}': unknown frame t={t}")]
    UnknownFrame { clip: String, t: u32 },

    #[error("unknown clip id '{0}'")]
    UnknownClip(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("synthetic generation failed: {0}")]
    Generation(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn clip(clip: &str, reason: impl Into<String>) -> Self {
        Error::InvalidClip {
            clip: clip.to_string(),
            reason: reason.into(),
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid generator spec: {0}")]
    Spec(String),

    /// Malformed binary or text input. `offset` is a byte offset for binary
    /// formats and a 1-based line number for CSV input.
    #[error("format error in {source_name} at {location}: {message}")]
    Format {
        source_name: String,
        location: Location,
        message: String,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("training diverged in {stage} at epoch {epoch} (non-finite loss)")]
    Divergence { stage: String, epoch: usize },

    #[error("unknown block `{0}`")]
    UnknownBlock(String),

    #[error("unknown class `{name}` for {vocabulary} images")]
    UnknownClass { name: String, vocabulary: String },

    #[error("insufficient source images: {0}")]
    InsufficientImages(String),

    #[error("dataset has no group annotations")]
    MissingGroups,

    #[error("no completed runs found under {0}")]
    EmptyRunDir(PathBuf),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Byte(u64),
    Line(u64),
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Location::Byte(b) => write!(f, "byte offset {b}"),
            Location::Line(l) => write!(f, "line {l}"),
        }
    }
}

impl Error {
    pub(crate) fn format_at_byte(
        source_name: impl Into<String>,
        offset: u64,
        message: impl Into<String>,
    ) -> Self {
        Error::Format {
            source_name: source_name.into(),
            location: Location::Byte(offset),
            message: message.into(),
        }
    }

    pub(crate) fn format_at_line(
        source_name: impl Into<String>,
        line: u64,
        message: impl Into<String>,
    ) -> Self {
        Error::Format {
            source_name: source_name.into(),
            location: Location::Line(line),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by malformed or inconsistent input data.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Format { .. }
                | Error::Shape(_)
                | Error::UnknownBlock(_)
                | Error::UnknownClass { .. }
                | Error::InsufficientImages(_)
                | Error::MissingGroups
                | Error::EmptyRunDir(_)
                | Error::Io { .. }
                | Error::Json(_)
        )
    }
}

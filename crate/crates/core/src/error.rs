use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported document format for {0} (no recognised extension and no override)")]
    UnsupportedFormat(String),

    #[error("document {0} is empty after normalization")]
    EmptyDocument(String),

    #[error("malformed {format} in {uri}: {message}")]
    Parse {
        uri: String,
        format: &'static str,
        message: String,
    },

    #[error("every document failed to load ({} failures)", .0.len())]
    AllDocumentsFailed(Vec<String>),

    #[error("duplicate chunk id {0}")]
    DuplicateChunk(String),

    #[error("duplicate id {0} within one ranked list")]
    DuplicateCandidate(String),

    #[error("duplicate abbreviation keys: {}", .0.join(", "))]
    DuplicateAbbreviation(Vec<String>),

    #[error("result count must be at least 1")]
    InvalidTopK,

    #[error("embedding provider mismatch: index built with {expected}, query provider is {actual}")]
    ProviderMismatch { expected: String, actual: String },

    #[error("embedding provider error: {0}")]
    Provider(String),

    #[error("no {0} index available for the requested retrieval mode")]
    MissingIndex(&'static str),

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error("query must not be empty")]
    EmptyQuery,

    #[error("prompt does not fit: {required} tokens required for the fixed parts, budget is {budget}")]
    Budget { required: usize, budget: usize },

    #[error("completion backend failed after {attempts} attempt(s): {message}")]
    Backend { attempts: u32, message: String },

    #[error("unknown {kind} `{value}`")]
    UnknownVariant { kind: &'static str, value: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

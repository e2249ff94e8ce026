use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("validation error for item `{item_id}`: {msg}")]
    Validation { item_id: String, msg: String },

    #[error("npy error: {0}")]
    Npy(String),

    #[error("mismatch: {0}")]
    Mismatch(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("length error: {left} vs {right}")]
    Length { left: usize, right: usize },

    #[error("empty: {0}")]
    Empty(String),

    #[error("item `{item_id}` is missing label `{label}`")]
    MissingLabel { item_id: String, label: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("singular system")]
    Singular,

    #[error("zero-norm vector in cosine similarity")]
    ZeroVector,

    #[error("config error: {0}")]
    Config(String),

    #[error("unsupported oracle query: {0}")]
    UnsupportedQuery(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn validation(item_id: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Validation {
            item_id: item_id.into(),
            msg: msg.into(),
        }
    }
}

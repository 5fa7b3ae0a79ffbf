use std::path::PathBuf;

use thiserror::Error;

/// Errors produced while loading inputs or computing statistics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("sentence at line {line} ({sentence}): {msg}")]
    InvalidSentence { line: usize, sentence: String, msg: String },

    #[error("record on line {line}: {msg}")]
    InvalidRecord { line: usize, msg: String },

    #[error("parsed sentence at line {line} references unknown url {url}")]
    OrphanSentence { line: usize, url: String },

    #[error("invalid hypothesis spec: {0}")]
    InvalidSpec(String),

    #[error("proportion undefined for {entity} {media}: no claims")]
    UndefinedProportion { entity: String, media: String },

    #[error("invalid tally: {0}")]
    InvalidTally(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("ratings line {line}: {msg}")]
    InvalidRating { line: u64, msg: String },

    #[error("no accepted ratings")]
    NoAcceptedRatings,

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

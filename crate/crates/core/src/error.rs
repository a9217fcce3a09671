use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the parser and evaluation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("empty graph has no connectivity")]
    EmptyGraph,

    #[error("{path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },

    #[error("id mismatch: {0}")]
    IdMismatch(String),

    #[error("anchor <{start}:{end}> of node {node} lies outside sentence {sentence} (length {len})")]
    AnchorOutOfBounds {
        sentence: String,
        node: String,
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("node {node} in sentence {sentence} cannot be aligned to any token")]
    Unalignable { sentence: String, node: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("oracle size bound exceeded: smaller graph has {0} nodes (limit {1})")]
    OracleTooLarge(usize, usize),

    #[error("model file: {0}")]
    Model(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::path::PathBuf;

use thiserror::Error;

use crate::smiles::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("function value is not finite at {context}")]
    NonFiniteFunctionValue { context: String },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("molecule has no atoms")]
    EmptyMolecule,

    #[error("batch is empty")]
    EmptyBatch,

    #[error("non-finite loss in batch {batch}")]
    NonFiniteLoss { batch: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("checkpoint schema mismatch: {0}")]
    SchemaVersionMismatch(String),

    #[error("malformed checkpoint {path}: {source}")]
    CorruptCheckpoint {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("labels not in the model vocabulary: {}", .0.join(", "))]
    LabelMismatch(Vec<String>),

    #[error("malformed CSV at line {line}: {message}")]
    MalformedCsv { line: u64, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn shape(op: &'static str, left: (usize, usize), right: (usize, usize)) -> Self {
        Error::ShapeMismatch { op, left, right }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: expected {expected} fields, found {found}")]
    Format {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: cannot parse {field:?} as a number")]
    Parse { line: usize, field: String },

    #[error("dataset contains no records")]
    EmptyDataset,

    #[error("feature dimension mismatch: {left} vs {right}")]
    Dimension { left: usize, right: usize },

    #[error("{items} items do not fit on a grid of {cells} cells")]
    Capacity { items: usize, cells: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("function type {0} has no composed pick/drop form")]
    Misuse(String),

    #[error("no resident items with label {0:?}")]
    UndefinedLabel(String),

    #[error("entropy series do not share a step grid: {0}")]
    Alignment(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

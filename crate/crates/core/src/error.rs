use std::path::PathBuf;

use crate::tensor::Shape3;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, got {found}")]
    ShapeMismatch { expected: Shape3, found: Shape3 },

    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid shape {0}: {1}")]
    InvalidShape(Shape3, &'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("zero tensor where a nonzero start tensor is required")]
    ZeroStart,

    #[error("point {0} is a boundary point without a normal")]
    MissingNormal(usize),

    #[error("points {0} and {1} coincide")]
    DuplicatePoint(usize, usize),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("singular system: {0}")]
    Singular(&'static str),

    #[error("config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

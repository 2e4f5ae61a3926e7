use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("comment `{comment}` has parent `{parent}` which is not in thread `{thread}`")]
    DanglingParent {
        comment: String,
        parent: String,
        thread: String,
    },

    #[error("comment `{comment}` has label {label}, expected 0 or 1")]
    InvalidLabel { comment: String, label: i64 },

    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),

    #[error("unknown comment id `{0}`")]
    UnknownComment(String),

    #[error("not enough examples for {k}-fold stratification: {positives} positives, {negatives} negatives")]
    TooFewExamples {
        k: usize,
        positives: usize,
        negatives: usize,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("both classes must be present")]
    SingleClass,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}

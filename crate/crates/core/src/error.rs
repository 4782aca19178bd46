use std::path::PathBuf;

use thiserror::Error;

use crate::data::Label;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row}, column '{column}': cannot parse '{value}' as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("column '{0}' not found in header")]
    MissingColumn(String),

    #[error("label column must hold exactly two distinct values, found {0:?}")]
    LabelValues(Vec<String>),

    #[error("only one class present: {0}")]
    SingleClass(String),

    #[error("column '{name}' is constant (sd = 0)")]
    ConstantColumn { name: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("no training point is classified opposite to x0")]
    NoOppositePoints,

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("no value of r produced a usable explanation: {0}")]
    TuningFailed(String),

    #[error(
        "label of x0 is not preserved by the codec round trip ({before} -> {after}); \
         refusing to explain through an unstable latent space"
    )]
    LabelUnstable { before: Label, after: Label },

    #[error("every attribute is constant over the sample: {0:?}")]
    DegenerateAttributes(Vec<String>),

    #[error("weighted R^2 is undefined: target has zero weighted variance")]
    UndefinedR2,

    #[error("subprocess: {0}")]
    Subprocess(String),

    #[error("json: {0}")]
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

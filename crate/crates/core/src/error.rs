use std::path::PathBuf;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("labels must be 0 or 1 (found {0})")]
    InvalidLabel(String),

    #[error("no latent vector falls inside the edge band (alpha={alpha}, beta={beta})")]
    EmptyEdgeSet { alpha: f64, beta: f64 },

    #[error("pool too small: need at least {needed} candidate rows, have {have}")]
    PoolTooSmall { needed: usize, have: usize },

    #[error("features must lie in [0, 1]; row {row} column {col} has {value}")]
    OutOfUnitRange { row: usize, col: usize, value: f64 },

    #[error("missing model: {0}")]
    MissingModel(String),

    #[error("test set must contain both classes ({positives} positives, {negatives} negatives)")]
    DegenerateTestClass { positives: usize, negatives: usize },

    #[error("target tpr {target} exceeds the curve's maximum tpr {max}")]
    TprUnreachable { target: f64, max: f64 },

    #[error("dataset has no labels")]
    MissingLabels,

    #[error("dataset has no normal rows")]
    NoNormalRows,

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("label column `{0}` not found")]
    MissingLabelColumn(String),

    #[error("unsupported model file version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn dims(context: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

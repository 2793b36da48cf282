use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed CSV at record {record}: {reason}")]
    MalformedCsv { record: usize, reason: String },
    #[error("missing column `{0}` in CSV header")]
    MissingColumn(String),
    #[error("bad label `{value}` for id {id}: expected 0 or 1")]
    BadLabel { id: String, value: String },
    #[error("record {0} has no text body")]
    MissingText(i64),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("numeric overflow in {0}: non-finite parameter encountered")]
    NumericOverflow(&'static str),
    #[error("document {0} has no trained vector")]
    UnknownDocument(i64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("empty input sequence")]
    EmptySequence,
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("kernel cache budget of {budget} bytes cannot hold two rows of {row_bytes} bytes")]
    BudgetTooSmall { budget: usize, row_bytes: usize },
    #[error("empty training input")]
    EmptyInput,
    #[error("negative feature value at row {row}, column {col}")]
    NegativeFeature { row: usize, col: usize },
    #[error("model is not trained")]
    UntrainedModel,
    #[error("fold {fold} lacks a class (k={k})")]
    FoldTooSmall { fold: usize, k: usize },
    #[error("no examples to evaluate")]
    EmptyEvaluation,
    #[error("bundle error: {0}")]
    Bundle(String),
    #[error("checksum mismatch for bundle component `{0}`")]
    Checksum(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn shape(expected: impl ToString, got: impl ToString) -> Self {
        Error::ShapeMismatch { expected: expected.to_string(), got: got.to_string() }
    }

    /// The innermost error, skipping stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for divergence-type failures (maps to exit code 3 in the CLI).
    pub fn is_numeric(&self) -> bool {
        matches!(self.root(), Error::NumericOverflow(_))
    }
}

pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage { stage, source: Box::new(e) })
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate token `{0}` in vocabulary")]
    DuplicateToken(String),
    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error("unknown token `{0}`")]
    UnknownToken(String),
    #[error("token index {0} is outside the vocabulary")]
    IndexOutOfRange(usize),
    #[error("invalid record {id}: {reason}")]
    InvalidRecord { id: u64, reason: String },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("dataset is degenerate: {0}")]
    DegenerateDataset(String),
    #[error("unknown pathway `{0}`")]
    UnknownPathway(String),
    #[error("generation stalled after {attempts} attempts: {reason}")]
    GenerationStalled { attempts: usize, reason: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("empty sequence")]
    EmptySequence,
    #[error("metric is undefined: {0}")]
    UndefinedMetric(String),
    #[error("instance has no units to attribute")]
    DegenerateInstance,
    #[error("exact Shapley enumeration supports at most {max} units, got {got}")]
    TooManyUnits { max: usize, got: usize },
    #[error("model evaluation failed: {0}")]
    Evaluation(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("model has no attention mechanism")]
    NoAttention,
    #[error("missing attribution for observation {0}")]
    MissingAttribution(u64),
    #[error("method `{method}` cannot explain model `{model}`")]
    IncompatibleMethod { method: String, model: String },
    #[error("missing artifact(s): {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    MissingArtifact(Vec<PathBuf>),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("acceptance check failed: {0}")]
    CheckFailed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) | Error::Json(_) => 2,
            Error::MissingArtifact(_) => 3,
            Error::Numeric(_) => 4,
            Error::CheckFailed(_) => 5,
            _ => 1,
        }
    }
}

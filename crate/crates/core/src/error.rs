use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("record {index}: {message}")]
    Malformed { index: usize, message: String },

    #[error("record {index}: missing field `{field}`")]
    MissingField { index: usize, field: &'static str },

    #[error("record {index}: invalid label {value} (expected 0 or 1)")]
    InvalidLabel { index: usize, value: String },

    #[error("cannot stratify: {0}")]
    CannotStratify(String),

    #[error("empty vocabulary: no tokens in the training corpus")]
    EmptyVocabulary,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training data must contain both labels")]
    SingleClass,

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    #[error("model weights became non-finite at step {step}")]
    NonFinite { step: usize },

    #[error("dimension mismatch: model expects {expected} features, vector has {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("paired t-test needs at least 2 pairs, got {0}")]
    TooFewPairs(usize),

    #[error("empty batch")]
    EmptyBatch,

    #[error("adapter error: {message}{}", excerpt_suffix(.excerpt))]
    Adapter { message: String, excerpt: String },

    #[error("adapter did not answer within {0} ms")]
    Timeout(u64),

    #[error("unknown format `{0}`")]
    UnknownFormat(String),

    #[error("model {model}: {source}")]
    Model {
        model: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn adapter(message: impl Into<String>, raw: &str) -> Self {
        Error::Adapter {
            message: message.into(),
            excerpt: excerpt(raw),
        }
    }

    /// True for errors caused by bad user input or configuration rather than
    /// a failure while running.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::UnknownFormat(_) | Error::Malformed { .. }
                | Error::MissingField { .. } | Error::InvalidLabel { .. } | Error::Io { .. }
        ) || matches!(self, Error::Model { source, .. } if source.is_config_error())
    }
}

fn excerpt_suffix(excerpt: &str) -> String {
    if excerpt.is_empty() {
        String::new()
    } else {
        format!(" (response: {excerpt:?})")
    }
}

fn excerpt(raw: &str) -> String {
    const MAX: usize = 200;
    match raw.char_indices().nth(MAX) {
        Some((cut, _)) => format!("{}...", &raw[..cut]),
        None => raw.to_string(),
    }
}

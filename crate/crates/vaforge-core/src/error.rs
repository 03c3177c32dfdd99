//! Crate-wide error type.
//!
//! Every fallible operation in the library returns [`Result`], so callers can
//! match on one enum regardless of which stage of the pipeline failed. The
//! variants carry enough context (line numbers, offending ids, expected
//! shapes) for a CLI to print an actionable message without re-deriving it.

use thiserror::Error;

/// Errors raised by dataset loading, featurization, training, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// A malformed input row that could not be parsed at all.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Structurally valid input that is missing or misusing a field.
    #[error("schema error: {0}")]
    Schema(String),

    /// A label that does not exist in the cause taxonomy.
    #[error("label error: {0}")]
    Label(String),

    /// A class that would be left with zero records by a split or filter.
    #[error("class {class:?} has no records ({context})")]
    EmptyClass { class: String, context: String },

    /// Cross-validation folds that cannot be formed as requested.
    #[error("fold error: {0}")]
    Fold(String),

    /// A vocabulary fit in which no term survived the document-frequency cut.
    #[error("empty vocabulary: no term appears in at least {min_df} documents")]
    EmptyVocabulary { min_df: usize },

    /// A shape mismatch between two objects that must agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Training data a learner cannot fit (for example a single class).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A NaN or infinity where a finite value is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A probability row whose sum is too far from one to repair.
    #[error("probabilities for {id:?} sum to {sum}, beyond tolerance {tolerance}")]
    Stochasticity { id: String, sum: f64, tolerance: f64 },

    /// A record id that appears more than once where ids must be unique.
    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    /// Two aligned collections whose ids or ordering disagree.
    #[error("alignment error: {0}")]
    Alignment(String),

    /// An ensemble operation invoked with no members.
    #[error("empty ensemble: at least one member is required")]
    EmptyEnsemble,

    /// A tabular indicator referenced but absent from the template.
    #[error("unknown indicator {0:?}")]
    UnknownIndicator(String),

    /// A tuning study in which every trial was pruned.
    #[error("all trials were pruned; no completed trial to select")]
    AllTrialsPruned,

    /// A population whose cause distribution makes the metric undefined.
    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    /// A modality-contribution computation with zero total gain.
    #[error("total gain is zero: modality contributions are undefined")]
    DegenerateGain,

    /// A numeric argument outside its documented range.
    #[error("range error: {name} = {value} is outside {expected}")]
    Range {
        name: String,
        value: f64,
        expected: String,
    },

    /// An underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// A JSON payload that failed to serialize or deserialize.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// A CSV payload that failed to serialize or deserialize.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Builds a [`Error::Parse`] with a one-based line number.
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// Builds a [`Error::Dimension`] from an expected/actual pair.
    pub fn dim(context: &str, expected: impl std::fmt::Display, actual: impl std::fmt::Display) -> Self {
        Error::Dimension(format!("{context}: expected {expected}, got {actual}"))
    }
}

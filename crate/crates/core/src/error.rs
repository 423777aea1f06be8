use thiserror::Error;

/// Errors raised by the conformal and credal routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("class index {index} out of range for {classes} classes")]
    ClassOutOfRange { index: usize, classes: usize },

    #[error("invalid probability vector: {0}")]
    InvalidProbVector(String),

    #[error("randomization draw {0} outside [0, 1]")]
    InvalidUniform(f64),

    #[error("missing randomization draw for randomized score")]
    MissingUniform,

    #[error("score kind {0:?} does not apply here")]
    WrongScoreKind(crate::scores::ScoreKind),

    #[error("weight must be positive, got {0}")]
    NonPositiveWeight(f64),

    #[error("invalid regression prediction: {0}")]
    InvalidRegressionPrediction(String),

    #[error("alpha {0} outside the admissible range")]
    InvalidAlpha(f64),

    #[error("jitter epsilon must be positive, got {0}")]
    InvalidJitter(f64),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("profile must be consonant")]
    NotConsonant,

    #[error("need at least {needed} labels, have {have}")]
    TooFewLabels { needed: usize, have: usize },

    #[error("label space of size {0} exceeds the enumeration cap of {max}", max = crate::oracle::MAX_ORACLE_LABELS)]
    LabelSpaceTooLarge(usize),

    #[error("invalid capacity: {0}")]
    InvalidCapacity(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("learner has not been fitted")]
    NotFitted,

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("pool exhausted after {acquired} acquisitions, {requested} rounds requested")]
    PoolExhausted { acquired: usize, requested: usize },

    #[error("need at least {needed} non-zero paired differences, have {have}")]
    TooFewDifferences { needed: usize, have: usize },

    #[error("paired samples differ in length: {0} vs {1}")]
    UnpairedSamples(usize, usize),

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn parse(path: impl AsRef<std::path::Path>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.as_ref().display().to_string(),
            message: message.into(),
        }
    }
}

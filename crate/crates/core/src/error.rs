use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty word pool: {0}")]
    EmptyPool(&'static str),

    #[error("insufficient seed coverage: {positive} positive and {negative} negative posts collected")]
    InsufficientSeedCoverage { positive: usize, negative: usize },

    #[error("holdout has {0} post(s) without a gold class")]
    UnlabeledHoldout(usize),

    #[error("theta {0} outside [0.4, 0.8]")]
    InvalidTheta(f64),

    #[error("negative count: {0}")]
    NegativeCount(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("token id {id} out of range for vocabulary of {vocab_size}")]
    TokenOutOfRange { id: usize, vocab_size: usize },

    #[error("class index {index} out of range for {num_classes} classes")]
    ClassOutOfRange { index: usize, num_classes: usize },

    #[error("stale activation cache: {0}")]
    StaleCache(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("model file format version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("vocabulary hash {found:016x} does not match model {expected:016x}")]
    VocabMismatch { found: u64, expected: u64 },

    #[error("length mismatch: {0} gold vs {1} predicted")]
    LengthMismatch(usize, usize),

    #[error("no positive support measured (N_PL = 0) for topic {0:?}")]
    NoPositiveSupport(String),

    #[error("empty confusion matrix")]
    EmptyMatrix,

    #[error("undefined true positive rate: no gold-positive posts")]
    UndefinedTpr,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by numerics rather than input data.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFiniteLoss { .. })
    }
}

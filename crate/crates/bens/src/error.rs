//! Crate-wide error type and exit-code classification.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// How an error should be reported by the command-line frontend.
///
/// Usage errors exit with code 1, data errors with 2, internal errors with 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    // ---- audio I/O ----
    #[error("audio file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("malformed WAV container in {path}: {detail}")]
    MalformedWav { path: PathBuf, detail: String },
    #[error("unsupported WAV codec in {path}: {detail}")]
    UnsupportedCodec { path: PathBuf, detail: String },
    #[error("empty audio buffer: {0}")]
    EmptyAudio(String),
    #[error("non-finite sample at index {index} in {source_id}")]
    NonFiniteSample { source_id: String, index: usize },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    // ---- configuration ----
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    // ---- framing / spectra ----
    #[error("signal too short: {samples} samples, need at least {frame_len} for one frame")]
    SignalTooShort { samples: usize, frame_len: usize },

    // ---- leading-digit statistics ----
    #[error("leading digit undefined for {value}{}", index.map(|i| format!(" (input index {i})")).unwrap_or_default())]
    DigitDomain { value: f64, index: Option<usize> },
    #[error("cannot normalize an empty histogram")]
    EmptyHistogram,
    #[error("invalid probability mass function: {0}")]
    InvalidPmf(String),
    #[error("KL divergence undefined: q({digit}) = 0 while p({digit}) > 0")]
    KlUndefined { digit: u8 },
    #[error("cannot average an empty set of distributions")]
    EmptyPmfSet,
    #[error("regression predictor has zero variance")]
    ZeroVariancePredictor,

    // ---- feature extraction ----
    #[error("spectrum has only {bins} bins; at least 9 are required to populate all digits")]
    SpectrumTooSmall { bins: usize },
    #[error(
        "insufficient valid frames: {retained} retained of {total} ({rejected} rejected), minimum {min}"
    )]
    InsufficientFrames {
        total: usize,
        rejected: usize,
        retained: usize,
        min: usize,
    },
    #[error("empty value series")]
    EmptySeries,
    #[error("percentile rank {0} outside [0, 100]")]
    PercentileRange(f64),
    #[error("need at least two feature vectors to fit normalization statistics, got {0}")]
    TooFewVectors(usize),
    #[error("feature '{name}' has zero variance; cannot z-score")]
    ZeroVarianceFeature { name: String },

    // ---- classification ----
    #[error("training data contains a single class only")]
    SingleClass,
    #[error("LOSO fold for speaker '{speaker}' leaves a single-class training set")]
    SingleClassFold { speaker: String },
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite feature value in sample '{sample_id}'")]
    NonFiniteFeature { sample_id: String },
    #[error("need at least two distinct speakers per class; class '{label}' has {speakers}")]
    TooFewSpeakers { label: String, speakers: usize },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("confusion matrix is empty")]
    EmptyConfusion,

    // ---- manifests, CSV, JSON ----
    #[error("manifest {path} line {line}: {detail}")]
    ManifestParse {
        path: PathBuf,
        line: usize,
        detail: String,
    },
    #[error("manifest {0} contains no entries")]
    EmptyManifest(PathBuf),
    #[error("feature CSV {path} line {line}: {detail}")]
    CsvParse {
        path: PathBuf,
        line: usize,
        detail: String,
    },
    #[error("{what} in {path}: {detail}")]
    JsonFormat {
        what: &'static str,
        path: PathBuf,
        detail: String,
    },
    #[error("{0}")]
    DataError(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// Classify the error for process exit-code purposes.
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            InvalidConfig(_) | PercentileRange(_) => ErrorClass::Usage,
            Internal(_) => ErrorClass::Internal,
            _ => ErrorClass::Data,
        }
    }

    /// Process exit code for this error (1 usage, 2 data, 3 internal).
    pub fn exit_code(&self) -> u8 {
        match self.class() {
            ErrorClass::Usage => 1,
            ErrorClass::Data => 2,
            ErrorClass::Internal => 3,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("spectrum is not Hermitian: imaginary residue {residue:e} exceeds tolerance {tolerance:e}")]
    Symmetry { residue: f64, tolerance: f64 },

    #[error("initial error violates the spatial bound at sample {index}: |{value:e}| > {bound:e}")]
    Precondition { index: usize, value: f64, bound: f64 },

    #[error("brute-force DFT refused: {len} samples exceeds the oracle cap of {cap}")]
    OracleCap { len: usize, cap: usize },

    #[error("metric undefined: {0}")]
    Undefined(&'static str),

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("size mismatch for {path}: expected {expected} bytes, found {actual}")]
    SizeMismatch {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },

    #[error("trial-and-error tuning failed after {} steps (last E = {:e})", .trace.len(), .trace.last().map_or(f64::NAN, |s| s.error_bound))]
    TuningFailed { trace: Vec<crate::ingest::TuneStep> },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

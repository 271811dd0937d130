use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operator requires a periodic grid")]
    NotPeriodic,

    #[error("operator requires a truncated (non-periodic) grid")]
    NotTruncated,

    #[error(
        "luxemburg bisection did not converge after {iterations} iterations \
         (bracket [{lo:e}, {hi:e}])"
    )]
    NonConvergence { iterations: usize, lo: f64, hi: f64 },

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("exponent order violated at grid point {index}: p1 = {p1} > p2 = {p2}")]
    OrderViolation { index: usize, p1: f64, p2: f64 },

    #[error("kernel is not radially nonincreasing: {0}")]
    NotRadial(String),

    #[error("smallness condition failed: delta = {delta:e}, threshold = {threshold:e}")]
    SmallnessViolated { delta: f64, threshold: f64 },

    #[error("fixed-point iteration did not converge; increments = {increments:?}")]
    FixedPointNonConvergence { increments: Vec<f64> },

    #[error("non-finite value in Picard iterate {iterate}")]
    NonFinite { iterate: usize },

    #[error("corpus element {index}: {source}")]
    Element {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid time interval [{t_start}, {t_end}]")]
    InvalidInterval { t_start: f64, t_end: f64 },
    #[error("ill-conditioned quintic: span {span} s is below 1e-6 s")]
    IllConditioned { span: f64 },
    #[error("inertia matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("plot output {path}: {message}")]
    Plot { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn dim(what: &'static str, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch {
            what,
            expected,
            got,
        }
    }
}

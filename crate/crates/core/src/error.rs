use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An inner Krylov solve did not reach its tolerance within the iteration cap.
    #[error("linear solver did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("disk series did not reach its truncation bound by order {max_order}")]
    SeriesDivergence { max_order: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("refractive index vanishes at pixel ({row}, {col})")]
    ZeroRefractiveIndex { row: usize, col: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: bad magic bytes, expected {expected:?}")]
    BadMagic { path: PathBuf, expected: &'static str },

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("no projector weights available: {0}")]
    MissingWeights(String),

    #[error(transparent)]
    Projector(#[from] lpinv_projector::ProjectorError),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("sample {sample}: {source}")]
    Sample {
        sample: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Attaches a sample id, keeping the inner error reachable through `source()`.
    pub fn for_sample(self, sample: impl Into<String>) -> Self {
        Error::Sample {
            sample: sample.into(),
            source: Box::new(self),
        }
    }

    /// True when the error, or the error it wraps, is an inner-solver failure.
    pub fn is_no_convergence(&self) -> bool {
        match self {
            Error::NoConvergence { .. } => true,
            Error::Sample { source, .. } => source.is_no_convergence(),
            _ => false,
        }
    }
}

use thiserror::Error;

/// Errors raised by the estimation kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} of {dim} failed after jitter)")]
    NotPositiveDefinite { pivot: usize, dim: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("bearing undefined at the origin")]
    OriginSingularity,

    #[error("window holds {have} of {need} records")]
    WindowNotFull { have: usize, need: usize },

    #[error("empty input sequence")]
    EmptyInput,

    #[error("model evaluation returned a non-finite value")]
    NonFiniteEvaluation,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("epoch {epoch}: {source}")]
    AtEpoch {
        epoch: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_epoch(self, epoch: usize) -> Self {
        match self {
            e @ Error::AtEpoch { .. } => e,
            other => Error::AtEpoch {
                epoch,
                source: Box::new(other),
            },
        }
    }

    /// Epoch attached by a sequence runner, if any.
    pub fn epoch(&self) -> Option<usize> {
        match self {
            Error::AtEpoch { epoch, .. } => Some(*epoch),
            _ => None,
        }
    }

    /// The underlying error with any epoch context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtEpoch { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

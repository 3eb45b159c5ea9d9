use thiserror::Error;

use crate::canon::CanonError;
use crate::corpus::CorpusError;
use crate::eval::EvalError;
use crate::features::FeatureError;
use crate::learn::LearnError;
use crate::pipeline::PipelineError;

/// Any failure surfaced by the library, grouped by stage.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Canon(#[from] CanonError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numeric solvers (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Learn(e) => e.is_numeric(),
            Error::Pipeline(PipelineError::Learn(e)) => e.is_numeric(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

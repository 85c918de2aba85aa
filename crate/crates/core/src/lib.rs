//! Pollution-vulnerability scoring with the analytic hierarchy process and
//! its variants: nested per-class subweights, the analytic network process,
//! triangular-fuzzy Monte-Carlo sensitivity, and the 1-N split that reserves
//! weight for unobserved acute and chronic factors.

pub mod anp;
pub mod config;
pub mod exec;
pub mod fuzzy;
pub mod one_n;
pub mod pairwise;
pub mod pipeline;
pub mod raster;
pub mod rng;

pub use exec::Execution;
pub use pairwise::{ComparisonMatrix, ConsistencyReport, PriorityVector};

use thiserror::Error;

/// Failure from any scoring module.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Pairwise(#[from] pairwise::PairwiseError),
    #[error(transparent)]
    Fuzzy(#[from] fuzzy::FuzzyError),
    #[error(transparent)]
    Anp(#[from] anp::AnpError),
    #[error(transparent)]
    Raster(#[from] raster::RasterError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Raster(raster::RasterError::Io(_)))
    }
}

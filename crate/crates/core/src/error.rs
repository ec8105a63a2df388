use thiserror::Error;

use crate::archspace::ArchError;
use crate::formats::FormatError;
use crate::metrics::MetricsError;
use crate::oracle::OracleError;
use crate::search::SearchError;
use crate::tensor::TensorError;
use crate::vgae::VgaeError;

/// Crate-wide error, wrapping the per-module error types.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Vgae(#[from] VgaeError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Format(#[from] FormatError),
}

pub type Result<T> = std::result::Result<T, Error>;

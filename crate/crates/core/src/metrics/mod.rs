//! Pre-training evaluation of a trained autoencoder.

mod ablation;
mod gp;
mod latent;
mod pretrain;
mod stats;

pub use ablation::{ablation_suite, AblationRow};
pub use gp::{fit_gp, predictive_fit, GpModel, PredictiveFit, SeedFit, GP_MAX_JITTER, GP_NOISE_FLOOR};
pub use latent::{chain_edit_distances, l2_edit_profile, neighbor_sequence, random_chain, EditProfile, NeighborChain};
pub use pretrain::{
    latent_stats, pretrain_report, prior_samples, prior_validity, reconstruction_accuracy, uniqueness, wl_ambiguous,
    LatentStats, PretrainReport, PriorDraws,
};
pub use stats::{mean_std, median, pearson, sign_test, spearman};

use thiserror::Error;

use crate::archspace::ArchError;
use crate::search::SearchError;
use crate::tensor::TensorError;
use crate::vgae::VgaeError;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("metric needs at least one sample")]
    EmptySet,
    #[error("kernel matrix is singular even with jitter {0}")]
    SingularKernel(f64),
    #[error("table has {available} entries, chain needs {needed}")]
    ExhaustedTable { needed: usize, available: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Vgae(#[from] VgaeError),
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

//! Variational graph autoencoder over padded cell matrices: GIN (or GCN)
//! encoder, Gaussian heads, inner-product edge decoder and softmax
//! operation decoder.

mod checkpoint;
mod config;
mod decode;
mod model;
mod train;

pub use config::{Aggregation, EncoderConfig, TrainHyper, Variant};
pub use decode::{decode_edges, kl_divergence, reparameterize};
pub use model::{augment_adjacency, gcn_operator, standard_normal, Batch, ElboTerms, LatentPoint, Vgae};
pub use train::{split_dataset, train, EpochRecord, TrainOutcome};

use thiserror::Error;

use crate::archspace::ArchError;
use crate::tensor::TensorError;

#[derive(Debug, Error)]
pub enum VgaeError {
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("adjacency entry ({row}, {col}) lies on or below the diagonal")]
    NotUpperTriangular { row: usize, col: usize },
    #[error("checkpoint does not describe a model: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Arch(#[from] ArchError),
}

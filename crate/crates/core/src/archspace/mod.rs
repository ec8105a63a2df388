//! Cell-based search spaces: encoding, validity, canonical keys and sampling.

mod canon;
mod cell;
pub mod darts;
mod edit;
pub mod nb201;
mod sample;
mod spec;
mod validate;

pub use canon::{canonical_hash, canonicalize, CanonicalKey, MAX_EXACT_NODES};
pub use cell::{decode_cell, encode_cell, CellGraph, EncodedCell};
pub use edit::{edit_distance, edit_distance_checked};
pub use nb201::{nb201_to_nodeop, Nb201Cell};
pub use sample::{enumerate, random_walk, uniform_sample, uniform_sample_with, unit_neighbors, DEFAULT_MAX_REJECTIONS};
pub use spec::{SearchSpaceSpec, SpaceKind};
pub use validate::{validate, ValidityReport, Violation};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArchError {
    #[error("invalid search space spec: {0}")]
    InvalidSpec(String),
    #[error("operation index {index} is outside the vocabulary of size {vocab}")]
    UnknownOperation { index: usize, vocab: usize },
    #[error("cell has {nodes} nodes but the space allows at most {max}")]
    TooManyNodes { nodes: usize, max: usize },
    #[error("adjacency entry ({row}, {col}) lies on or below the diagonal")]
    NotUpperTriangular { row: usize, col: usize },
    #[error("malformed operation row {row}: {reason}")]
    MalformedOneHot { row: usize, reason: String },
    #[error("matrix shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("exact canonicalisation supports at most {max} nodes, space has {nodes}")]
    TooLargeForExact { nodes: usize, max: usize },
    #[error("cells belong to different spaces ({0} vs {1})")]
    SpecMismatch(String, String),
    #[error("no valid cell found after {0} rejections")]
    SamplingExhausted(u64),
    #[error("space {0} is too large to enumerate")]
    SpaceTooLarge(String),
    #[error("cell is not valid in the space: {0}")]
    InvalidCell(String),
    #[error("random walk reached a dead end at step {0}")]
    DeadEnd(usize),
    #[error("bad edge set: {0}")]
    BadEdgeSet(String),
}

//! Unsupervised architecture embeddings for cell-based search spaces.
//!
//! The crate is organised bottom-up:
//!
//! - [`archspace`]: search-space definitions, matrix encodings, validity rules,
//!   canonical keys, edit distance, sampling and enumeration.
//! - [`tensor`]: small dense `f64` tensors with hand-written backward passes and
//!   an Adam parameter store.
//! - [`vgae`]: the variational graph-isomorphism autoencoder (GIN encoder,
//!   inner-product edge decoder, softmax operation decoder, ELBO training).
//! - [`metrics`]: pre-training evaluation (reconstruction, prior validity,
//!   uniqueness, GP predictive fit, latent smoothness, neighbour chains).
//! - [`oracle`]: tabular and synthetic accuracy oracles with simulated
//!   wall-clock accounting.
//! - [`search`]: REINFORCE, DNGO-style Bayesian optimisation and random search
//!   over a frozen embedding table.
//! - [`formats`]: line-delimited file formats shared with external tooling.

pub mod archspace;
pub mod error;
pub mod formats;
pub mod metrics;
pub mod oracle;
pub mod rng;
pub mod search;
pub mod tensor;
pub mod vgae;

pub use error::{Error, Result};

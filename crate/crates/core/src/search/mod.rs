//! Architecture search over a frozen embedding table: a REINFORCE agent,
//! DNGO-style Bayesian optimisation and a random-search baseline.

mod acquisition;
mod blr;
mod dngo;
mod index;
mod random;
mod reinforce;
#[cfg(test)]
pub(crate) mod tests_support;
mod trace;

pub use acquisition::expected_improvement;
pub use blr::{blr_posterior, fit_blr, BlrPosterior, EVIDENCE_MAX_ITERS, FALLBACK_ALPHA, FALLBACK_BETA};
pub use dngo::{dngo_search, DngoHyper};
pub use index::{build_index, EmbeddingTable, NeighborIndex};
pub use random::random_search;
pub use reinforce::{reinforce_search, BaselineMode, EpisodeMode, ReinforceHyper};
pub use trace::{Budget, SearchSpace, SearchTrace, TerminalReason, TraceEvent};

use thiserror::Error;

use crate::oracle::OracleError;
use crate::tensor::TensorError;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("embedding table is empty")]
    EmptyTable,
    #[error("every entry is excluded")]
    AllExcluded,
    #[error("search budget is zero")]
    BudgetZero,
    #[error("duplicate id {0} in embedding table")]
    DuplicateId(u64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("linear system is singular even with jitter")]
    SingularSystem,
    #[error("invalid search configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

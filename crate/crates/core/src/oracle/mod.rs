//! Accuracy oracles (tabular files or a deterministic synthetic function)
//! and simulated wall-clock accounting.

mod clock;
mod synthetic;
mod tabular;

pub use clock::{query, BudgetClock, QueryOutcome};
pub use synthetic::{synthetic_accuracy, SyntheticOracle};
pub use tabular::{TabularOracle, TabularRow};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archspace::{ArchError, CanonicalKey, CellGraph};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: missing field {field}")]
    MissingField { line: usize, field: &'static str },
    #[error("duplicate canonical key {0}")]
    DuplicateKey(String),
    #[error("architecture {0} is not in the oracle")]
    UnknownArchitecture(String),
    #[error("query costs {cost} s but only {remaining} s of budget remain")]
    BudgetExceeded { cost: f64, remaining: f64 },
    #[error("query budget of {0} queries is spent")]
    QueryBudgetExceeded(usize),
    #[error("cell is not valid in the oracle's space: {0}")]
    InvalidCell(String),
    #[error("record out of range: {0}")]
    BadRecord(String),
    #[error("oracle is empty")]
    EmptyOracle,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Arch(#[from] ArchError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub validation_accuracy: f64,
    pub test_accuracy: f64,
    pub training_seconds: f64,
}

impl OracleRecord {
    pub fn check(&self) -> Result<(), OracleError> {
        let acc_ok = |a: f64| a.is_finite() && (0.0..=1.0).contains(&a);
        if !acc_ok(self.validation_accuracy) || !acc_ok(self.test_accuracy) {
            return Err(OracleError::BadRecord(format!("accuracies must lie in [0, 1]: {self:?}")));
        }
        if !(self.training_seconds.is_finite() && self.training_seconds > 0.0) {
            return Err(OracleError::BadRecord(format!("training time must be positive: {self:?}")));
        }
        Ok(())
    }

    /// Gap to `best` on test accuracy.
    pub fn regret(&self, best: &OracleRecord) -> f64 {
        best.test_accuracy - self.test_accuracy
    }
}

/// Anything that can report accuracy and cost for a cell.
pub trait AccuracyOracle: Sync {
    fn key(&self, cell: &CellGraph) -> Result<CanonicalKey, OracleError>;
    fn lookup_key(&self, key: &CanonicalKey, cell: &CellGraph) -> Result<OracleRecord, OracleError>;

    fn lookup(&self, cell: &CellGraph) -> Result<OracleRecord, OracleError> {
        let key = self.key(cell)?;
        self.lookup_key(&key, cell)
    }
}

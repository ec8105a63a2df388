use std::collections::HashMap;

use super::{AccuracyOracle, OracleError, OracleRecord};
use crate::archspace::{CanonicalKey, CellGraph};

/// Simulated wall-clock and query accounting for one search run.
#[derive(Debug, Clone)]
pub struct BudgetClock {
    elapsed_seconds: f64,
    budget_seconds: f64,
    query_count: usize,
    query_budget: Option<usize>,
    seen: HashMap<CanonicalKey, OracleRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryOutcome {
    pub key: CanonicalKey,
    pub record: OracleRecord,
    /// repeat query answered from the cache at no cost
    pub cached: bool,
}

impl BudgetClock {
    pub fn new(budget_seconds: f64) -> Self {
        Self { elapsed_seconds: 0.0, budget_seconds, query_count: 0, query_budget: None, seen: HashMap::new() }
    }

    pub fn with_query_budget(mut self, queries: usize) -> Self {
        self.query_budget = Some(queries);
        self
    }

    pub fn elapsed(&self) -> f64 {
        self.elapsed_seconds
    }

    pub fn budget(&self) -> f64 {
        self.budget_seconds
    }

    pub fn remaining(&self) -> f64 {
        self.budget_seconds - self.elapsed_seconds
    }

    pub fn query_count(&self) -> usize {
        self.query_count
    }

    pub fn query_budget(&self) -> Option<usize> {
        self.query_budget
    }

    /// Whether another distinct query is allowed by the query budget.
    pub fn queries_left(&self) -> bool {
        self.query_budget.is_none_or(|q| self.query_count < q)
    }
}

/// Looks up a cell and charges its training time to the clock. Repeats
/// are free; a query that would overrun either budget is rejected and
/// leaves the clock unchanged.
pub fn query(
    oracle: &dyn AccuracyOracle,
    cell: &CellGraph,
    clock: &mut BudgetClock,
) -> Result<QueryOutcome, OracleError> {
    let key = oracle.key(cell)?;
    if let Some(record) = clock.seen.get(&key) {
        return Ok(QueryOutcome { key, record: *record, cached: true });
    }
    let record = oracle.lookup_key(&key, cell)?;
    if let Some(q) = clock.query_budget {
        if clock.query_count >= q {
            return Err(OracleError::QueryBudgetExceeded(q));
        }
    }
    if clock.elapsed_seconds + record.training_seconds > clock.budget_seconds {
        return Err(OracleError::BudgetExceeded { cost: record.training_seconds, remaining: clock.remaining() });
    }
    clock.elapsed_seconds += record.training_seconds;
    clock.query_count += 1;
    clock.seen.insert(key, record);
    Ok(QueryOutcome { key, record, cached: false })
}

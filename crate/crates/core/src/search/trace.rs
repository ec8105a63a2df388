use serde::{Deserialize, Serialize};

use super::{NeighborIndex, SearchError};
use crate::archspace::CellGraph;
use crate::oracle::{query, AccuracyOracle, BudgetClock, OracleError};

/// Frozen search problem: embeddings, the cells they encode (row-aligned)
/// and the oracle scoring them.
#[derive(Clone, Copy)]
pub struct SearchSpace<'a> {
    pub index: &'a NeighborIndex,
    pub cells: &'a [CellGraph],
    pub oracle: &'a dyn AccuracyOracle,
}

impl<'a> SearchSpace<'a> {
    pub fn new(
        index: &'a NeighborIndex,
        cells: &'a [CellGraph],
        oracle: &'a dyn AccuracyOracle,
    ) -> Result<Self, SearchError> {
        if index.len() != cells.len() {
            return Err(SearchError::Dimension(format!("{} embeddings but {} cells", index.len(), cells.len())));
        }
        Ok(Self { index, cells, oracle })
    }
}

/// Simulated seconds plus an optional cap on distinct queries. A run with
/// a `target` also stops once its incumbent validation accuracy reaches it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub seconds: f64,
    pub queries: Option<usize>,
    #[serde(default)]
    pub target: Option<f64>,
}

impl Budget {
    pub fn seconds(seconds: f64) -> Self {
        Self { seconds, queries: None, target: None }
    }

    pub fn queries(queries: usize) -> Self {
        Self { seconds: f64::INFINITY, queries: Some(queries), target: None }
    }

    pub fn with_target(self, target: f64) -> Self {
        Self { target: Some(target), ..self }
    }

    pub(crate) fn check(&self) -> Result<(), SearchError> {
        if !(self.seconds > 0.0) || self.queries == Some(0) {
            return Err(SearchError::BudgetZero);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalReason {
    Budget,
    Queries,
    Exhausted,
    Target,
}

/// One line of a trace file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step: usize,
    pub id: u64,
    /// validation accuracy of the queried architecture
    pub reward: f64,
    pub test_accuracy: f64,
    pub elapsed_seconds: f64,
    /// best validation accuracy so far
    pub incumbent: f64,
    /// test accuracy of the incumbent
    pub incumbent_test: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub events: Vec<TraceEvent>,
    pub terminal: TerminalReason,
}

impl SearchTrace {
    pub fn final_incumbent(&self) -> Option<&TraceEvent> {
        self.events.last()
    }

    /// One-based query count at which `id` was first queried.
    pub fn queries_to(&self, id: u64) -> Option<usize> {
        self.events.iter().position(|e| e.id == id).map(|p| p + 1)
    }

    pub fn incumbent_curve(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.incumbent).collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.events.windows(2).all(|w| w[1].incumbent >= w[0].incumbent && w[1].elapsed_seconds > w[0].elapsed_seconds)
    }
}

/// Mutable state of one run: clock, visited rows and the trace so far.
pub(crate) struct Run<'a> {
    pub space: SearchSpace<'a>,
    target: Option<f64>,
    pub clock: BudgetClock,
    pub visited: Vec<bool>,
    pub events: Vec<TraceEvent>,
    pub terminal: Option<TerminalReason>,
}

impl<'a> Run<'a> {
    pub fn new(space: SearchSpace<'a>, budget: &Budget) -> Result<Self, SearchError> {
        budget.check()?;
        let mut clock = BudgetClock::new(budget.seconds);
        if let Some(q) = budget.queries {
            clock = clock.with_query_budget(q);
        }
        Ok(Self {
            target: budget.target,
            visited: vec![false; space.index.len()],
            space,
            clock,
            events: Vec::new(),
            terminal: None,
        })
    }

    pub fn done(&self) -> bool {
        self.terminal.is_some()
    }

    pub fn all_visited(&self) -> bool {
        self.visited.iter().all(|&v| v)
    }

    /// Queries `row`, marking it visited. Returns the reward, or `None`
    /// once a budget stops the run.
    pub fn query(&mut self, row: usize) -> Result<Option<f64>, SearchError> {
        if self.terminal.is_some() {
            return Ok(None);
        }
        if !self.clock.queries_left() {
            self.terminal = Some(TerminalReason::Queries);
            return Ok(None);
        }
        let outcome = match query(self.space.oracle, &self.space.cells[row], &mut self.clock) {
            Ok(o) => o,
            Err(OracleError::BudgetExceeded { .. }) => {
                self.terminal = Some(TerminalReason::Budget);
                return Ok(None);
            }
            Err(OracleError::QueryBudgetExceeded(_)) => {
                self.terminal = Some(TerminalReason::Queries);
                return Ok(None);
            }
            Err(e) => return Err(e.into()),
        };
        self.visited[row] = true;
        let r = outcome.record;
        if !outcome.cached {
            let prev = self.events.last();
            let improves = prev.is_none_or(|p| r.validation_accuracy > p.incumbent);
            let (incumbent, incumbent_test) = if improves {
                (r.validation_accuracy, r.test_accuracy)
            } else {
                let p = prev.unwrap();
                (p.incumbent, p.incumbent_test)
            };
            self.events.push(TraceEvent {
                step: self.events.len(),
                id: self.space.index.id(row),
                reward: r.validation_accuracy,
                test_accuracy: r.test_accuracy,
                elapsed_seconds: self.clock.elapsed(),
                incumbent,
                incumbent_test,
            });
        }
        if self.target.is_some_and(|t| self.events.last().is_some_and(|e| e.incumbent >= t)) {
            self.terminal = Some(TerminalReason::Target);
        } else if self.all_visited() {
            self.terminal = Some(TerminalReason::Exhausted);
        }
        Ok(Some(r.validation_accuracy))
    }

    pub fn finish(mut self) -> SearchTrace {
        if self.terminal.is_none() {
            self.terminal = Some(if self.all_visited() { TerminalReason::Exhausted } else { TerminalReason::Budget });
        }
        SearchTrace { events: self.events, terminal: self.terminal.unwrap() }
    }
}

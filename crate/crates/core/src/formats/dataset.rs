use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{read_ndjson, write_ndjson, FormatError};
use crate::archspace::{validate, CellGraph, SearchSpaceSpec};

/// One architecture: node count, upper-triangle adjacency as a row-major
/// bit string, and operation indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    pub id: u64,
    pub n_nodes: usize,
    pub adjacency: String,
    pub ops: Vec<usize>,
}

impl DatasetRecord {
    pub fn from_cell(id: u64, cell: &CellGraph) -> Self {
        let n = cell.num_nodes();
        let adjacency = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| if cell.has_edge(i, j) { '1' } else { '0' })
            .collect();
        Self { id, n_nodes: n, adjacency, ops: cell.ops().to_vec() }
    }

    pub fn to_cell(&self) -> Result<CellGraph, String> {
        let n = self.n_nodes;
        if self.ops.len() != n {
            return Err(format!("{} ops for {n} nodes", self.ops.len()));
        }
        let expected = n * n.saturating_sub(1) / 2;
        if self.adjacency.len() != expected {
            return Err(format!("adjacency has {} bits, expected {expected}", self.adjacency.len()));
        }
        let mut adj = vec![false; n * n];
        let mut bits = self.adjacency.chars();
        for i in 0..n {
            for j in (i + 1)..n {
                adj[i * n + j] = match bits.next() {
                    Some('0') => false,
                    Some('1') => true,
                    other => return Err(format!("adjacency bit {other:?} is not 0 or 1")),
                };
            }
        }
        CellGraph::from_dense(self.ops.clone(), adj).map_err(|e| e.to_string())
    }
}

/// Parses and validates a dataset file; ids must be unique and every cell
/// valid in `spec`.
pub fn parse_dataset(text: &str, spec: &SearchSpaceSpec) -> Result<Vec<(u64, CellGraph)>, FormatError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, rec) in read_ndjson::<DatasetRecord>(text)? {
        if !seen.insert(rec.id) {
            return Err(FormatError::DuplicateId { line, id: rec.id });
        }
        if rec.n_nodes > spec.max_nodes {
            return Err(FormatError::Record {
                line,
                message: format!("{} nodes exceed the space maximum {}", rec.n_nodes, spec.max_nodes),
            });
        }
        if let Some(op) = rec.ops.iter().find(|&&o| o >= spec.num_ops()) {
            return Err(FormatError::Record { line, message: format!("operation index {op} out of range") });
        }
        let cell = rec.to_cell().map_err(|message| FormatError::Record { line, message })?;
        let report = validate(&cell, spec);
        if !report.valid {
            let rules: Vec<&str> = report.violations.iter().map(|v| v.rule.as_str()).collect();
            return Err(FormatError::Record { line, message: format!("invalid cell: {}", rules.join(", ")) });
        }
        out.push((rec.id, cell));
    }
    Ok(out)
}

pub fn write_dataset<'a>(cells: impl IntoIterator<Item = (u64, &'a CellGraph)>) -> String {
    let recs: Vec<DatasetRecord> = cells.into_iter().map(|(id, c)| DatasetRecord::from_cell(id, c)).collect();
    write_ndjson(&recs)
}

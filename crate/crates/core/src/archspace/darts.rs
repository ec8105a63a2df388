//! DARTS cells in the 11-node encoding: `c_{k-2}`, `c_{k-1}`, two
//! edge-operation nodes per intermediate node, and the output `c_k`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::CellGraph;

/// Number of intermediate nodes in a DARTS cell.
pub const INTERMEDIATES: usize = 4;

/// One incoming edge of an intermediate node. `source` is 0/1 for the two
/// cell inputs or `2 + m` for intermediate node `m`; `op` indexes the
/// DARTS vocabulary (2..=9).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DartsEdge {
    pub source: usize,
    pub op: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DartsGenotype {
    pub edges: [[DartsEdge; 2]; INTERMEDIATES],
}

impl DartsGenotype {
    pub fn to_cell(&self) -> CellGraph {
        let n = 3 + 2 * INTERMEDIATES;
        let mut ops = vec![0usize; n];
        ops[1] = 1;
        ops[n - 1] = 10;
        let mut edges = Vec::new();
        for (m, pair) in self.edges.iter().enumerate() {
            for (k, e) in pair.iter().enumerate() {
                let node = 2 + 2 * m + k;
                ops[node] = e.op;
                match e.source {
                    0 | 1 => edges.push((e.source, node)),
                    s => {
                        let prev = s - 2;
                        edges.push((2 + 2 * prev, node));
                        edges.push((3 + 2 * prev, node));
                    }
                }
                edges.push((node, n - 1));
            }
        }
        CellGraph::new(ops, &edges).expect("genotype sources precede their targets")
    }
}

/// Uniform genotype: each edge picks a source among the inputs and earlier
/// intermediates and one of the eight operations.
pub fn sample_genotype<R: Rng>(rng: &mut R) -> DartsGenotype {
    let mut edges = [[DartsEdge { source: 0, op: 2 }; 2]; INTERMEDIATES];
    for (m, pair) in edges.iter_mut().enumerate() {
        for e in pair.iter_mut() {
            e.source = rng.random_range(0..2 + m);
            e.op = rng.random_range(2..10);
        }
    }
    DartsGenotype { edges }
}

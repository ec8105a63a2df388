//! NAS-Bench-201 cells: operations on the six edges of a fixed 4-node DAG,
//! converted into node-op form so they share the node-op encoder.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ArchError, CellGraph, SearchSpaceSpec, SpaceKind};

/// Edges of the original 4-node DAG, in architecture-string order.
pub const EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3)];

pub const EDGE_OPS: [&str; 5] = ["none", "skip_connect", "nor_conv_1x1", "nor_conv_3x3", "avg_pool_3x3"];

/// One operation index (into [`EDGE_OPS`]) per entry of [`EDGES`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Nb201Cell {
    pub ops: [usize; 6],
}

impl Nb201Cell {
    pub fn from_edge_map(map: &BTreeMap<(usize, usize), usize>) -> Result<Self, ArchError> {
        if map.len() != EDGES.len() {
            return Err(ArchError::BadEdgeSet(format!("expected 6 edges, got {}", map.len())));
        }
        let mut ops = [0; 6];
        for (slot, e) in EDGES.iter().enumerate() {
            let op = *map.get(e).ok_or_else(|| ArchError::BadEdgeSet(format!("missing edge {e:?}")))?;
            if op >= EDGE_OPS.len() {
                return Err(ArchError::BadEdgeSet(format!("edge {e:?} has operation {op}")));
            }
            ops[slot] = op;
        }
        Ok(Self { ops })
    }

    /// Parses the benchmark's architecture string, e.g.
    /// `|nor_conv_3x3~0|+|none~0|skip_connect~1|+|avg_pool_3x3~0|nor_conv_1x1~1|none~2|`.
    pub fn parse_arch_str(s: &str) -> Result<Self, ArchError> {
        let bad = |m: String| ArchError::BadEdgeSet(m);
        let mut map = BTreeMap::new();
        let stages: Vec<&str> = s.trim().split('+').collect();
        if stages.len() != 3 {
            return Err(bad(format!("expected 3 stages, got {}", stages.len())));
        }
        for (idx, stage) in stages.iter().enumerate() {
            let target = idx + 1;
            let stage = stage.trim();
            let inner = stage
                .strip_prefix('|')
                .and_then(|x| x.strip_suffix('|'))
                .ok_or_else(|| bad(format!("stage {target} is not delimited by '|'")))?;
            let parts: Vec<&str> = inner.split('|').collect();
            if parts.len() != target {
                return Err(bad(format!("stage {target} has {} inputs", parts.len())));
            }
            for part in parts {
                let (name, src) = part.split_once('~').ok_or_else(|| bad(format!("missing '~' in {part:?}")))?;
                let src: usize = src.parse().map_err(|_| bad(format!("bad source in {part:?}")))?;
                let op = EDGE_OPS
                    .iter()
                    .position(|&o| o == name)
                    .ok_or_else(|| bad(format!("unknown operation {name:?}")))?;
                if src >= target || map.insert((src, target), op).is_some() {
                    return Err(bad(format!("bad or repeated source in {part:?}")));
                }
            }
        }
        Self::from_edge_map(&map)
    }

    pub fn to_arch_str(&self) -> String {
        let mut stages = Vec::new();
        for target in 1..4 {
            let mut s = String::from("|");
            for src in 0..target {
                let slot = EDGES.iter().position(|&e| e == (src, target)).unwrap();
                s.push_str(&format!("{}~{}|", EDGE_OPS[self.ops[slot]], src));
            }
            stages.push(s);
        }
        stages.join("+")
    }

    /// All 5^6 cells in lexicographic order of their operation tuples.
    pub fn all() -> impl Iterator<Item = Nb201Cell> {
        (0..5usize.pow(6)).map(|mut code| {
            let mut ops = [0; 6];
            for slot in (0..6).rev() {
                ops[slot] = code % 5;
                code /= 5;
            }
            Nb201Cell { ops }
        })
    }
}

/// Edge list of the transformed 8-node graph: node 0 is the input, node
/// `1 + s` holds the operation of `EDGES[s]`, node 7 is the output.
pub fn transformed_edges() -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for (s, &(i, _)) in EDGES.iter().enumerate() {
        let node = 1 + s;
        if i == 0 {
            edges.push((0, node));
        } else {
            for (t, &(_, j)) in EDGES.iter().enumerate() {
                if j == i {
                    edges.push((1 + t, node));
                }
            }
        }
    }
    for (s, &(_, j)) in EDGES.iter().enumerate() {
        if j == 3 {
            edges.push((1 + s, 7));
        }
    }
    edges.sort_unstable();
    edges
}

pub fn nb201_to_nodeop(cell: &Nb201Cell, spec: &SearchSpaceSpec) -> Result<CellGraph, ArchError> {
    if spec.kind != SpaceKind::EdgeOp || spec.max_nodes != 8 || spec.num_ops() != EDGE_OPS.len() + 2 {
        return Err(ArchError::BadEdgeSet(format!("space {} is not an edge-op space", spec.name)));
    }
    if let Some(&op) = cell.ops.iter().find(|&&o| o >= EDGE_OPS.len()) {
        return Err(ArchError::BadEdgeSet(format!("operation index {op} out of range")));
    }
    let mut ops = vec![0usize; 8];
    for (s, &op) in cell.ops.iter().enumerate() {
        ops[1 + s] = 1 + op;
    }
    ops[7] = spec.output_op();
    CellGraph::new(ops, &transformed_edges())
}

use serde::{Deserialize, Serialize};

use super::{ArchError, SearchSpaceSpec};

/// A labelled DAG over its used nodes, in topological (row) order.
///
/// Edges only go from lower to higher indices, so the adjacency matrix is
/// strictly upper-triangular by construction. Padding is not stored; it is
/// added by [`encode_cell`] up to the space's node count.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellGraph {
    ops: Vec<usize>,
    adj: Vec<bool>,
}

impl CellGraph {
    /// Builds a cell from operation labels and an edge list.
    pub fn new(ops: Vec<usize>, edges: &[(usize, usize)]) -> Result<Self, ArchError> {
        let n = ops.len();
        let mut adj = vec![false; n * n];
        for &(i, j) in edges {
            if i >= j {
                return Err(ArchError::NotUpperTriangular { row: i, col: j });
            }
            if j >= n {
                return Err(ArchError::BadEdgeSet(format!("edge ({i}, {j}) outside {n} nodes")));
            }
            adj[i * n + j] = true;
        }
        Ok(Self { ops, adj })
    }

    /// Builds a cell from a dense row-major adjacency matrix.
    pub fn from_dense(ops: Vec<usize>, adj: Vec<bool>) -> Result<Self, ArchError> {
        let n = ops.len();
        if adj.len() != n * n {
            return Err(ArchError::ShapeMismatch(format!("adjacency has {} entries, expected {}", adj.len(), n * n)));
        }
        for i in 0..n {
            for j in 0..=i {
                if adj[i * n + j] {
                    return Err(ArchError::NotUpperTriangular { row: i, col: j });
                }
            }
        }
        Ok(Self { ops, adj })
    }

    pub fn num_nodes(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[usize] {
        &self.ops
    }

    pub fn op(&self, i: usize) -> usize {
        self.ops[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        let n = self.num_nodes();
        i < n && j < n && self.adj[i * n + j]
    }

    /// Sets or clears edge `i -> j`; requires `i < j < n`.
    pub fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        let n = self.num_nodes();
        assert!(i < j && j < n, "edge ({i}, {j}) is not strictly upper-triangular in {n} nodes");
        self.adj[i * n + j] = present;
    }

    pub fn set_op(&mut self, i: usize, op: usize) {
        self.ops[i] = op;
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.num_nodes();
        (0..n).flat_map(move |i| ((i + 1)..n).filter(move |&j| self.adj[i * n + j]).map(move |j| (i, j)))
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|&&e| e).count()
    }

    pub fn predecessors(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        (0..j).filter(move |&i| self.has_edge(i, j))
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        ((i + 1)..self.num_nodes()).filter(move |&j| self.has_edge(i, j))
    }

    /// Relabels nodes with `perm[old] = new`. Returns `None` when the result
    /// would not be upper-triangular.
    pub fn permuted(&self, perm: &[usize]) -> Option<Self> {
        let n = self.num_nodes();
        debug_assert_eq!(perm.len(), n);
        let mut ops = vec![0; n];
        let mut adj = vec![false; n * n];
        for i in 0..n {
            ops[perm[i]] = self.ops[i];
        }
        for (i, j) in self.edges() {
            let (a, b) = (perm[i], perm[j]);
            if a >= b {
                return None;
            }
            adj[a * n + b] = true;
        }
        Some(Self { ops, adj })
    }
}

/// Fixed-shape matrix form of a cell: `N x N` adjacency and `N x K` one-hot
/// operations, both row-major, padded with trailing zero rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedCell {
    pub nodes: usize,
    pub ops_width: usize,
    pub adjacency: Vec<u8>,
    pub ops: Vec<u8>,
}

impl EncodedCell {
    pub fn adj(&self, i: usize, j: usize) -> u8 {
        self.adjacency[i * self.nodes + j]
    }

    /// Label index of row `i`, or `None` for a padding row.
    pub fn op_label(&self, i: usize) -> Option<usize> {
        let row = &self.ops[i * self.ops_width..(i + 1) * self.ops_width];
        row.iter().position(|&v| v == 1)
    }
}

pub fn encode_cell(cell: &CellGraph, spec: &SearchSpaceSpec) -> Result<EncodedCell, ArchError> {
    let big_n = spec.max_nodes;
    let k = spec.num_ops();
    let n = cell.num_nodes();
    if n > big_n {
        return Err(ArchError::TooManyNodes { nodes: n, max: big_n });
    }
    let mut adjacency = vec![0u8; big_n * big_n];
    let mut ops = vec![0u8; big_n * k];
    for (i, &op) in cell.ops().iter().enumerate() {
        if op >= k {
            return Err(ArchError::UnknownOperation { index: op, vocab: k });
        }
        ops[i * k + op] = 1;
    }
    for (i, j) in cell.edges() {
        adjacency[i * big_n + j] = 1;
    }
    Ok(EncodedCell { nodes: big_n, ops_width: k, adjacency, ops })
}

/// Inverse of [`encode_cell`]. Checks structure only; space validity is
/// judged by [`super::validate`].
pub fn decode_cell(adjacency: &[u8], ops: &[u8], spec: &SearchSpaceSpec) -> Result<CellGraph, ArchError> {
    let big_n = spec.max_nodes;
    let k = spec.num_ops();
    if adjacency.len() != big_n * big_n {
        return Err(ArchError::ShapeMismatch(format!(
            "adjacency has {} entries, expected {}x{}",
            adjacency.len(),
            big_n,
            big_n
        )));
    }
    if ops.len() != big_n * k {
        return Err(ArchError::ShapeMismatch(format!(
            "operation matrix has {} entries, expected {}x{}",
            ops.len(),
            big_n,
            k
        )));
    }
    for i in 0..big_n {
        for j in 0..big_n {
            match adjacency[i * big_n + j] {
                0 => {}
                1 if i < j => {}
                1 => return Err(ArchError::NotUpperTriangular { row: i, col: j }),
                v => return Err(ArchError::ShapeMismatch(format!("adjacency entry ({i}, {j}) = {v} is not binary"))),
            }
        }
    }

    let mut labels = Vec::with_capacity(big_n);
    let mut padding_from = None;
    for i in 0..big_n {
        let row = &ops[i * k..(i + 1) * k];
        if let Some(v) = row.iter().find(|&&v| v > 1) {
            return Err(ArchError::MalformedOneHot { row: i, reason: format!("entry {v} is not binary") });
        }
        let ones = row.iter().filter(|&&v| v == 1).count();
        let touches = (0..big_n).any(|j| adjacency[i * big_n + j] != 0 || adjacency[j * big_n + i] != 0);
        match ones {
            1 => {
                if padding_from.is_some() {
                    return Err(ArchError::MalformedOneHot { row: i, reason: "padding rows must be trailing".into() });
                }
                labels.push(row.iter().position(|&v| v == 1).unwrap());
            }
            0 => {
                if touches {
                    return Err(ArchError::MalformedOneHot { row: i, reason: "empty row has edges".into() });
                }
                if !spec.padding {
                    return Err(ArchError::MalformedOneHot { row: i, reason: "space does not allow padding".into() });
                }
                padding_from.get_or_insert(i);
            }
            c => return Err(ArchError::MalformedOneHot { row: i, reason: format!("{c} ones") }),
        }
    }

    let n = labels.len();
    let mut adj = vec![false; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            adj[i * n + j] = adjacency[i * big_n + j] == 1;
        }
    }
    Ok(CellGraph { ops: labels, adj })
}

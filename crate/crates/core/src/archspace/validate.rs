use serde::{Deserialize, Serialize};

use super::{nb201, CellGraph, SearchSpaceSpec, SpaceKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        Self { valid: violations.is_empty(), violations }
    }

    pub fn has(&self, rule: &str) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

pub mod rules {
    pub const NODE_COUNT: &str = "node-count";
    pub const INPUT_FIRST: &str = "input-first";
    pub const OUTPUT_LAST: &str = "output-last";
    pub const OP_VOCAB: &str = "op-vocab";
    pub const ON_PATH: &str = "on-path";
    pub const MAX_EDGES: &str = "max-edges";
    pub const FIXED_TOPOLOGY: &str = "fixed-topology";

    pub const DARTS_INPUTS: &str = "darts-inputs";
    pub const DARTS_OUTPUT: &str = "darts-output";
    pub const DARTS_PREDECESSOR: &str = "darts-predecessor";
    pub const DARTS_SUCCESSOR: &str = "darts-successor";
    pub const DARTS_TWO_INPUTS: &str = "darts-two-inputs";
    pub const DARTS_UPPER_TRIANGULAR: &str = "darts-upper-triangular";
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, rule: &str, message: impl Into<String>) {
        self.0.push(Violation { rule: rule.to_string(), message: message.into() });
    }
}

/// Checks a structurally well-formed cell against the space's rules.
pub fn validate(cell: &CellGraph, spec: &SearchSpaceSpec) -> ValidityReport {
    let mut out = Collector(Vec::new());
    match spec.kind {
        SpaceKind::NodeOp | SpaceKind::Synthetic => node_op_rules(cell, spec, &mut out),
        SpaceKind::EdgeOp => edge_op_rules(cell, spec, &mut out),
        SpaceKind::DartsCell => darts_rules(cell, spec, &mut out),
    }
    ValidityReport::from_violations(out.0)
}

fn node_op_rules(cell: &CellGraph, spec: &SearchSpaceSpec, out: &mut Collector) {
    let n = cell.num_nodes();
    if n < 2 || n > spec.max_nodes {
        out.push(rules::NODE_COUNT, format!("{n} nodes, allowed 2..={}", spec.max_nodes));
        if n < 2 {
            return;
        }
    }
    if cell.op(0) != 0 {
        out.push(rules::INPUT_FIRST, format!("node 0 has label {}", cell.op(0)));
    }
    if cell.op(n - 1) != spec.output_op() {
        out.push(rules::OUTPUT_LAST, format!("node {} has label {}", n - 1, cell.op(n - 1)));
    }
    for i in 1..n - 1 {
        if !spec.is_compute_op(cell.op(i)) {
            out.push(rules::OP_VOCAB, format!("node {i} has non-compute label {}", cell.op(i)));
        }
    }
    if cell.ops().iter().any(|&o| o >= spec.num_ops()) {
        out.push(rules::OP_VOCAB, "label outside vocabulary");
    }
    let off_path = off_path_nodes(cell);
    if !off_path.is_empty() {
        out.push(rules::ON_PATH, format!("nodes {off_path:?} are not on an input-output path"));
    }
    if let Some(max) = spec.max_edges {
        let e = cell.edge_count();
        if e > max {
            out.push(rules::MAX_EDGES, format!("{e} edges, allowed {max}"));
        }
    }
}

/// Nodes that are not both reachable from node 0 and able to reach node n-1.
fn off_path_nodes(cell: &CellGraph) -> Vec<usize> {
    let n = cell.num_nodes();
    let mut from_input = vec![false; n];
    from_input[0] = true;
    for j in 1..n {
        from_input[j] = cell.predecessors(j).any(|i| from_input[i]);
    }
    let mut to_output = vec![false; n];
    to_output[n - 1] = true;
    for i in (0..n - 1).rev() {
        to_output[i] = cell.successors(i).any(|j| to_output[j]);
    }
    (0..n).filter(|&i| !(from_input[i] && to_output[i])).collect()
}

fn edge_op_rules(cell: &CellGraph, spec: &SearchSpaceSpec, out: &mut Collector) {
    let n = cell.num_nodes();
    if n != spec.max_nodes {
        out.push(rules::NODE_COUNT, format!("{n} nodes, edge-op cells have {}", spec.max_nodes));
        return;
    }
    if cell.op(0) != 0 {
        out.push(rules::INPUT_FIRST, format!("node 0 has label {}", cell.op(0)));
    }
    if cell.op(n - 1) != spec.output_op() {
        out.push(rules::OUTPUT_LAST, format!("node {} has label {}", n - 1, cell.op(n - 1)));
    }
    for i in 1..n - 1 {
        if !spec.is_compute_op(cell.op(i)) {
            out.push(rules::OP_VOCAB, format!("node {i} has non-compute label {}", cell.op(i)));
        }
    }
    let expected = nb201::transformed_edges();
    let actual: Vec<_> = cell.edges().collect();
    if actual != expected {
        out.push(rules::FIXED_TOPOLOGY, "edges differ from the fixed transformed topology");
    }
}

fn darts_rules(cell: &CellGraph, spec: &SearchSpaceSpec, out: &mut Collector) {
    let n = cell.num_nodes();
    let out_op = spec.output_op();
    // 1. first two nodes are the inputs (and no other node is)
    let inputs_ok =
        n >= 2 && cell.op(0) == 0 && cell.op(1) == 1 && cell.ops().iter().skip(2).all(|&o| !spec.is_input_op(o));
    if !inputs_ok {
        out.push(rules::DARTS_INPUTS, "the first two nodes must be the input nodes c_{k-2} and c_{k-1}");
    }
    // 2. last node is the output (and no other node is)
    let output_ok = n == spec.max_nodes && cell.op(n - 1) == out_op && cell.ops()[..n - 1].iter().all(|&o| o != out_op);
    if !output_ok {
        out.push(rules::DARTS_OUTPUT, "the last node must be the output node c_k");
    }
    if n < 3 {
        return;
    }
    // 3. every non-input node has a predecessor
    let orphans: Vec<_> = (2..n).filter(|&j| cell.predecessors(j).next().is_none()).collect();
    if !orphans.is_empty() {
        out.push(rules::DARTS_PREDECESSOR, format!("nodes {orphans:?} have no predecessor"));
    }
    // 4. every non-output node has a successor
    let sinks: Vec<_> = (0..n - 1).filter(|&i| cell.successors(i).next().is_none()).collect();
    if !sinks.is_empty() {
        out.push(rules::DARTS_SUCCESSOR, format!("nodes {sinks:?} have no successor"));
    }
    // 5. each intermediate node (pair of edge-operation nodes) draws two
    //    inputs: every edge-operation node reads exactly one earlier source,
    //    which is an input node or the complete pair of an earlier
    //    intermediate node.
    for i in 2..n - 1 {
        let m = (i - 2) / 2;
        let preds: Vec<_> = cell.predecessors(i).collect();
        let ok = match preds.as_slice() {
            [0] | [1] => true,
            [a, b] => *a >= 2 && a % 2 == 0 && *b == a + 1 && (a - 2) / 2 < m,
            _ => false,
        };
        if !ok {
            out.push(
                rules::DARTS_TWO_INPUTS,
                format!("node {i} of intermediate {m} reads {preds:?}, not a single earlier source"),
            );
        }
    }
    // 6. upper-triangular adjacency: guaranteed by CellGraph construction.
    debug_assert!(cell.edges().all(|(i, j)| i < j), "{}", rules::DARTS_UPPER_TRIANGULAR);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archspace::darts;

    #[test]
    fn minimal_cell_is_valid() {
        let spec = SearchSpaceSpec::synthetic();
        let cell = CellGraph::new(vec![0, 4], &[(0, 1)]).unwrap();
        let r = validate(&cell, &spec);
        assert!(r.valid, "{r:?}");
    }

    #[test]
    fn dangling_node_is_rejected() {
        let spec = SearchSpaceSpec::synthetic();
        // node 2 has no outgoing edge
        let cell = CellGraph::new(vec![0, 1, 2, 4], &[(0, 1), (1, 3), (0, 2)]).unwrap();
        let r = validate(&cell, &spec);
        assert!(!r.valid);
        assert!(r.has(rules::ON_PATH));
    }

    #[test]
    fn too_many_edges_and_bad_labels() {
        let spec = SearchSpaceSpec::synthetic();
        let edges: Vec<_> = (0..5).flat_map(|i| ((i + 1)..5).map(move |j| (i, j))).collect();
        let cell = CellGraph::new(vec![1, 4, 2, 3, 0], &edges).unwrap();
        let r = validate(&cell, &spec);
        assert!(r.has(rules::MAX_EDGES));
        assert!(r.has(rules::INPUT_FIRST));
        assert!(r.has(rules::OUTPUT_LAST));
        assert!(r.has(rules::OP_VOCAB));
        assert_eq!(r.valid, r.violations.is_empty());
    }

    #[test]
    fn darts_genotypes_pass_all_but_input_use() {
        // a genotype that never reads c_{k-1} leaves that input without a successor
        let spec = SearchSpaceSpec::darts();
        let mut rng = crate::rng::seeded(3);
        let mut seen_invalid = false;
        for _ in 0..200 {
            let cell = darts::sample_genotype(&mut rng).to_cell();
            let r = validate(&cell, &spec);
            let uses_both = cell.successors(0).next().is_some() && cell.successors(1).next().is_some();
            assert_eq!(r.valid, uses_both, "{r:?}");
            seen_invalid |= !uses_both;
        }
        assert!(seen_invalid);
    }

    #[test]
    fn darts_first_node_must_be_input() {
        let spec = SearchSpaceSpec::darts();
        let mut rng = crate::rng::seeded(4);
        let cell = darts::sample_genotype(&mut rng).to_cell();
        let mut broken = cell.clone();
        broken.set_op(0, 5);
        let r = validate(&broken, &spec);
        assert!(!r.valid);
        assert!(r.has(rules::DARTS_INPUTS));
        assert!(r.violations[0].message.contains("first two nodes must be the input nodes"));
    }

    #[test]
    fn darts_each_rule_can_fire() {
        let spec = SearchSpaceSpec::darts();
        let mut rng = crate::rng::seeded(5);
        let cell = darts::sample_genotype(&mut rng).to_cell();

        let mut no_out = cell.clone();
        no_out.set_op(10, 3);
        assert!(validate(&no_out, &spec).has(rules::DARTS_OUTPUT));

        let mut orphan = cell.clone();
        orphan.set_edge(0, 2, false);
        orphan.set_edge(1, 2, false);
        assert!(validate(&orphan, &spec).has(rules::DARTS_PREDECESSOR));

        // the last intermediate's nodes only feed the output
        let mut sink = cell.clone();
        sink.set_edge(9, 10, false);
        assert!(validate(&sink, &spec).has(rules::DARTS_SUCCESSOR));

        let mut three = cell;
        three.set_edge(0, 9, true);
        three.set_edge(1, 9, true);
        assert!(validate(&three, &spec).has(rules::DARTS_TWO_INPUTS));
    }
}

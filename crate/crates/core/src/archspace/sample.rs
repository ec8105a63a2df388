use rand::Rng;

use super::darts::sample_genotype;
use super::nb201::Nb201Cell;
use super::{canonicalize, nb201_to_nodeop, validate, ArchError, CellGraph, SearchSpaceSpec, SpaceKind};
use crate::rng;

pub const DEFAULT_MAX_REJECTIONS: u64 = 1_000_000;

/// Raw (unvalidated) candidate count above which enumeration is refused.
const ENUMERATION_LIMIT: f64 = 1e8;

fn raw_count(spec: &SearchSpaceSpec, n: usize) -> f64 {
    let pairs = n * (n - 1) / 2;
    let c = spec.compute_ops().len() as f64;
    2f64.powi(pairs as i32) * c.powi(n as i32 - 2)
}

fn random_node_op_cell<R: Rng>(spec: &SearchSpaceSpec, rng: &mut R) -> CellGraph {
    let lo = if spec.padding { 2 } else { spec.max_nodes };
    let weights: Vec<f64> = (lo..=spec.max_nodes).map(|n| raw_count(spec, n)).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut n = spec.max_nodes;
    for (k, w) in weights.iter().enumerate() {
        if u < *w {
            n = lo + k;
            break;
        }
        u -= w;
    }
    let mut ops = Vec::with_capacity(n);
    ops.push(0);
    let compute = spec.compute_ops();
    for _ in 1..n - 1 {
        ops.push(rng.random_range(compute.clone()));
    }
    ops.push(spec.output_op());
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<bool>() {
                edges.push((i, j));
            }
        }
    }
    CellGraph::new(ops, &edges).expect("sampled edges are upper-triangular")
}

/// Samples a valid cell.
///
/// Node-op spaces draw raw matrices uniformly (node count weighted by its
/// raw matrix count) and keep a draw only when it is valid and already in
/// canonical form, which makes the result uniform over isomorphism classes.
/// Edge-op and DARTS cells are drawn uniformly from their generators.
pub fn uniform_sample(spec: &SearchSpaceSpec, seed: u64) -> Result<CellGraph, ArchError> {
    uniform_sample_with(spec, &mut rng::seeded(seed), DEFAULT_MAX_REJECTIONS)
}

pub fn uniform_sample_with<R: Rng>(
    spec: &SearchSpaceSpec,
    rng: &mut R,
    max_rejections: u64,
) -> Result<CellGraph, ArchError> {
    match spec.kind {
        SpaceKind::EdgeOp => {
            let mut ops = [0; 6];
            for o in ops.iter_mut() {
                *o = rng.random_range(0..5);
            }
            nb201_to_nodeop(&Nb201Cell { ops }, spec)
        }
        SpaceKind::DartsCell => {
            for _ in 0..max_rejections {
                let cell = sample_genotype(rng).to_cell();
                if validate(&cell, spec).valid {
                    return Ok(cell);
                }
            }
            Err(ArchError::SamplingExhausted(max_rejections))
        }
        SpaceKind::NodeOp | SpaceKind::Synthetic => {
            for _ in 0..max_rejections {
                let cell = random_node_op_cell(spec, rng);
                if validate(&cell, spec).valid && canonicalize(&cell, spec)? == cell {
                    return Ok(cell);
                }
            }
            Err(ArchError::SamplingExhausted(max_rejections))
        }
    }
}

/// Every valid, canonically distinct cell exactly once, ordered by node
/// count, then adjacency bitmask, then operation tuple.
pub fn enumerate(spec: &SearchSpaceSpec) -> Result<Box<dyn Iterator<Item = CellGraph>>, ArchError> {
    match spec.kind {
        SpaceKind::EdgeOp => {
            let spec = spec.clone();
            Ok(Box::new(Nb201Cell::all().map(move |c| nb201_to_nodeop(&c, &spec).expect("edge-op spec checked"))))
        }
        SpaceKind::DartsCell => Err(ArchError::SpaceTooLarge(spec.name.clone())),
        SpaceKind::NodeOp | SpaceKind::Synthetic => {
            let lo = if spec.padding { 2 } else { spec.max_nodes };
            let total: f64 = (lo..=spec.max_nodes).map(|n| raw_count(spec, n)).sum();
            if total > ENUMERATION_LIMIT || spec.max_nodes > super::MAX_EXACT_NODES {
                return Err(ArchError::SpaceTooLarge(spec.name.clone()));
            }
            let spec = spec.clone();
            Ok(Box::new((lo..=spec.max_nodes).flat_map(move |n| enumerate_n(spec.clone(), n))))
        }
    }
}

fn enumerate_n(spec: SearchSpaceSpec, n: usize) -> impl Iterator<Item = CellGraph> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let compute: Vec<usize> = spec.compute_ops().collect();
    let max_edges = spec.max_edges.unwrap_or(usize::MAX);
    let n_ops = compute.len().pow(n as u32 - 2);
    (0u64..(1u64 << pairs.len())).flat_map(move |mask| {
        let mut out = Vec::new();
        if (mask.count_ones() as usize) > max_edges {
            return out.into_iter();
        }
        let edges: Vec<_> = pairs.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &e)| e).collect();
        let mut ops = vec![0usize; n];
        ops[n - 1] = spec.output_op();
        // structure check once with placeholder labels
        ops[1..n - 1].fill(compute[0]);
        let probe = CellGraph::new(ops.clone(), &edges).expect("upper-triangular");
        if !validate(&probe, &spec).valid {
            return out.into_iter();
        }
        for code in 0..n_ops {
            let mut c = code;
            for slot in (1..n - 1).rev() {
                ops[slot] = compute[c % compute.len()];
                c /= compute.len();
            }
            let cell = CellGraph::new(ops.clone(), &edges).expect("upper-triangular");
            if canonicalize(&cell, &spec).expect("size checked") == cell {
                out.push(cell);
            }
        }
        out.into_iter()
    })
}

/// Valid cells at edit distance exactly one: a single adjacency flip among
/// the used nodes or a single relabelling of an intermediate node.
pub fn unit_neighbors(cell: &CellGraph, spec: &SearchSpaceSpec) -> Vec<CellGraph> {
    let n = cell.num_nodes();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut c = cell.clone();
            c.set_edge(i, j, !cell.has_edge(i, j));
            if validate(&c, spec).valid {
                out.push(c);
            }
        }
    }
    for i in spec.num_inputs()..n.saturating_sub(1) {
        for op in spec.compute_ops() {
            if op != cell.op(i) {
                let mut c = cell.clone();
                c.set_op(i, op);
                if validate(&c, spec).valid {
                    out.push(c);
                }
            }
        }
    }
    out
}

/// Walk of `steps` moves where consecutive cells differ by exactly one
/// edit and no move returns to the immediately preceding cell.
pub fn random_walk(
    start: &CellGraph,
    steps: usize,
    spec: &SearchSpaceSpec,
    seed: u64,
) -> Result<Vec<CellGraph>, ArchError> {
    let report = validate(start, spec);
    if !report.valid {
        return Err(ArchError::InvalidCell(format!("{:?}", report.violations)));
    }
    let mut rng = rng::seeded(seed);
    let mut walk = Vec::with_capacity(steps + 1);
    walk.push(start.clone());
    for step in 0..steps {
        let current = walk.last().unwrap();
        let previous = if walk.len() >= 2 { Some(&walk[walk.len() - 2]) } else { None };
        let options: Vec<CellGraph> =
            unit_neighbors(current, spec).into_iter().filter(|c| Some(c) != previous).collect();
        if options.is_empty() {
            return Err(ArchError::DeadEnd(step));
        }
        let next = options[rng.random_range(0..options.len())].clone();
        walk.push(next);
    }
    Ok(walk)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archspace::edit_distance;

    #[test]
    fn two_node_space_has_one_cell() {
        let spec = SearchSpaceSpec::synthetic_with(2, 3, 1);
        let cells: Vec<_> = enumerate(&spec).unwrap().collect();
        assert_eq!(cells, vec![CellGraph::new(vec![0, 4], &[(0, 1)]).unwrap()]);
    }

    #[test]
    fn nb201_enumerates_all_assignments() {
        assert_eq!(enumerate(&SearchSpaceSpec::nasbench201()).unwrap().count(), 15_625);
    }

    #[test]
    fn large_spaces_refuse_enumeration() {
        assert!(matches!(enumerate(&SearchSpaceSpec::darts()), Err(ArchError::SpaceTooLarge(_))));
        assert!(matches!(enumerate(&SearchSpaceSpec::nasbench101()), Err(ArchError::SpaceTooLarge(_))));
    }

    #[test]
    fn sampling_is_deterministic_and_valid() {
        for spec in [SearchSpaceSpec::synthetic(), SearchSpaceSpec::nasbench101(), SearchSpaceSpec::darts()] {
            let a = uniform_sample(&spec, 11).unwrap();
            let b = uniform_sample(&spec, 11).unwrap();
            assert_eq!(a, b);
            assert!(validate(&a, &spec).valid);
        }
    }

    #[test]
    fn sampling_exhaustion() {
        let spec = SearchSpaceSpec::synthetic();
        let mut r = rng::seeded(0);
        assert!(matches!(uniform_sample_with(&spec, &mut r, 0), Err(ArchError::SamplingExhausted(0))));
    }

    #[test]
    fn walk_basics() {
        let spec = SearchSpaceSpec::synthetic();
        let start = CellGraph::new(vec![0, 1, 2, 3, 4], &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        assert_eq!(random_walk(&start, 0, &spec, 1).unwrap(), vec![start.clone()]);
        let walk = random_walk(&start, 200, &spec, 1).unwrap();
        assert_eq!(walk.len(), 201);
        for w in walk.windows(2) {
            assert_eq!(edit_distance(&w[0], &w[1], &spec).unwrap(), 1);
        }
        for w in walk.windows(3) {
            assert_ne!(w[0], w[2]);
        }
    }

    #[test]
    fn walk_dead_end() {
        // the only 2-node cell has no valid unit neighbour
        let spec = SearchSpaceSpec::synthetic();
        let start = CellGraph::new(vec![0, 4], &[(0, 1)]).unwrap();
        assert_eq!(random_walk(&start, 1, &spec, 0), Err(ArchError::DeadEnd(0)));
    }
}

use std::collections::{HashSet, VecDeque};

use itertools::Itertools;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use latentnas::archspace::{
    canonical_hash, decode_cell, edit_distance, encode_cell, enumerate, nb201_to_nodeop, uniform_sample, validate,
    CellGraph, Nb201Cell, SearchSpaceSpec,
};
use latentnas::rng;

/// Every labelled synthetic cell that passes validation, by brute force
/// over all upper-triangular adjacencies and intermediate labels.
fn all_valid_synthetic() -> Vec<CellGraph> {
    let spec = SearchSpaceSpec::synthetic();
    let mut out = Vec::new();
    for n in 2..=spec.max_nodes {
        let pairs: Vec<(usize, usize)> = (0..n).tuple_combinations().collect();
        for mask in 0u32..(1 << pairs.len()) {
            let edges: Vec<(usize, usize)> =
                pairs.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &e)| e).collect();
            for mid in (0..n - 2).map(|_| spec.compute_ops()).multi_cartesian_product() {
                let ops: Vec<usize> = std::iter::once(0).chain(mid).chain(std::iter::once(spec.output_op())).collect();
                let cell = CellGraph::new(ops, &edges).unwrap();
                if validate(&cell, &spec).valid {
                    out.push(cell);
                }
            }
        }
    }
    out
}

fn reachable(cell: &CellGraph, from: usize, forward: bool) -> HashSet<usize> {
    let mut seen = HashSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        let next: Vec<usize> = if forward { cell.successors(u).collect() } else { cell.predecessors(u).collect() };
        for v in next {
            if seen.insert(v) {
                queue.push_back(v);
            }
        }
    }
    seen
}

fn brute_isomorphic(a: &CellGraph, b: &CellGraph) -> bool {
    let n = a.num_nodes();
    if n != b.num_nodes() {
        return false;
    }
    if n < 3 {
        return a == b;
    }
    (1..n - 1).permutations(n - 2).any(|mid| {
        let perm: Vec<usize> = std::iter::once(0).chain(mid).chain(std::iter::once(n - 1)).collect();
        a.permuted(&perm).is_some_and(|p| p == *b)
    })
}

#[test]
fn synthetic_space_counts_match_brute_force() {
    let spec = SearchSpaceSpec::synthetic();
    let all = all_valid_synthetic();
    assert_eq!(all.len(), 1312);
    let keys: HashSet<_> = all.iter().map(|c| canonical_hash(c, &spec).unwrap()).collect();
    assert_eq!(keys.len(), 965);
    assert_eq!(enumerate(&spec).unwrap().count(), 965);
}

#[test]
fn encode_decode_is_identity_on_every_synthetic_cell() {
    let spec = SearchSpaceSpec::synthetic();
    for cell in all_valid_synthetic() {
        let e = encode_cell(&cell, &spec).unwrap();
        assert_eq!(decode_cell(&e.adjacency, &e.ops, &spec).unwrap(), cell);
    }
}

#[test]
fn encode_decode_is_identity_on_sampled_cells() {
    for spec in [SearchSpaceSpec::nasbench101(), SearchSpaceSpec::darts()] {
        (0..10_000u64).into_par_iter().for_each(|seed| {
            let cell = uniform_sample(&spec, seed).unwrap();
            let e = encode_cell(&cell, &spec).unwrap();
            assert_eq!(decode_cell(&e.adjacency, &e.ops, &spec).unwrap(), cell, "{} seed {seed}", spec.name);
        });
    }
}

#[test]
fn every_nb201_cell_transforms_to_a_valid_cell() {
    let spec = SearchSpaceSpec::nasbench201();
    let mut n = 0;
    for cell in Nb201Cell::all() {
        let g = nb201_to_nodeop(&cell, &spec).unwrap();
        assert!(validate(&g, &spec).valid, "{}", cell.to_arch_str());
        let e = encode_cell(&g, &spec).unwrap();
        assert_eq!(decode_cell(&e.adjacency, &e.ops, &spec).unwrap(), g);
        n += 1;
    }
    assert_eq!(n, 15_625);
}

#[test]
fn validity_implies_every_node_lies_on_a_path() {
    for cell in all_valid_synthetic() {
        let n = cell.num_nodes();
        let (fwd, back) = (reachable(&cell, 0, true), reachable(&cell, n - 1, false));
        assert!((0..n).all(|v| fwd.contains(&v) && back.contains(&v)), "{cell:?}");
    }
}

#[test]
fn canonical_keys_agree_with_brute_force_isomorphism() {
    let spec = SearchSpaceSpec::synthetic();
    let all = all_valid_synthetic();
    let mut r = rng::seeded(500);
    let mut cells: Vec<CellGraph> = (0..250).map(|_| all[r.random_range(0..all.len())].clone()).collect();
    for i in 0..250 {
        let c = &cells[i];
        let n = c.num_nodes();
        let relabelled = (0..20).find_map(|_| {
            let mut mid: Vec<usize> = (1..n.saturating_sub(1)).collect();
            mid.shuffle(&mut r);
            let perm: Vec<usize> = if n < 3 {
                (0..n).collect()
            } else {
                std::iter::once(0).chain(mid).chain(std::iter::once(n - 1)).collect()
            };
            c.permuted(&perm)
        });
        cells.push(relabelled.unwrap_or_else(|| c.clone()));
    }
    let keys: Vec<_> = cells.iter().map(|c| canonical_hash(c, &spec).unwrap()).collect();
    let mut equal_pairs = 0;
    for i in 0..cells.len() {
        for j in (i + 1)..cells.len() {
            let iso = brute_isomorphic(&cells[i], &cells[j]);
            assert_eq!(keys[i] == keys[j], iso, "{:?} vs {:?}", cells[i], cells[j]);
            equal_pairs += usize::from(iso);
        }
    }
    assert!(equal_pairs >= 250);
}

proptest! {
    #[test]
    fn edit_distance_is_a_metric(a in 0usize..1312, b in 0usize..1312, c in 0usize..1312) {
        thread_local!(static ALL: Vec<CellGraph> = all_valid_synthetic());
        let spec = SearchSpaceSpec::synthetic();
        ALL.with(|all| {
            let d = |x: usize, y: usize| edit_distance(&all[x], &all[y], &spec).unwrap();
            prop_assert_eq!(d(a, a), 0);
            prop_assert_eq!(d(a, b), d(b, a));
            prop_assert_eq!(d(a, b) == 0, all[a] == all[b]);
            prop_assert!(d(a, c) <= d(a, b) + d(b, c));
            Ok(())
        })?;
    }

    #[test]
    fn random_nb101_matrices_pass_only_with_full_paths(bits in prop::collection::vec(any::<bool>(), 21), mid in prop::collection::vec(1usize..4, 5)) {
        let spec = SearchSpaceSpec::nasbench101();
        let pairs: Vec<(usize, usize)> = (0..7).tuple_combinations().collect();
        let edges: Vec<(usize, usize)> = pairs.into_iter().zip(&bits).filter(|(_, &b)| b).map(|(e, _)| e).collect();
        let ops: Vec<usize> = std::iter::once(0).chain(mid).chain(std::iter::once(spec.output_op())).collect();
        let cell = CellGraph::new(ops, &edges).unwrap();
        if validate(&cell, &spec).valid {
            let (fwd, back) = (reachable(&cell, 0, true), reachable(&cell, 6, false));
            prop_assert!((0..7).all(|v| fwd.contains(&v) && back.contains(&v)));
            prop_assert!(cell.edge_count() <= spec.max_edges.unwrap());
        }
    }
}

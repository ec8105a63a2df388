use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::stats::{median, spearman};
use super::MetricsError;
use crate::archspace::{edit_distance, random_walk, uniform_sample, CellGraph, SearchSpaceSpec};
use crate::rng;
use crate::search::NeighborIndex;
use crate::vgae::Vgae;

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Embedding distances grouped by edit distance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EditProfile {
    pub by_distance: BTreeMap<usize, Vec<f64>>,
}

impl EditProfile {
    pub fn medians(&self) -> BTreeMap<usize, f64> {
        self.by_distance.iter().filter_map(|(&d, v)| median(v).map(|m| (d, m))).collect()
    }

    /// Rank correlation between edit distance and median L2 over `lo..=hi`.
    pub fn spearman(&self, lo: usize, hi: usize) -> Option<f64> {
        let (ds, ms): (Vec<f64>, Vec<f64>) =
            self.medians().into_iter().filter(|(d, _)| (lo..=hi).contains(d)).map(|(d, m)| (d as f64, m)).unzip();
        spearman(&ds, &ms)
    }

    /// `(edit_distance, l2)` rows in ascending distance order.
    pub fn rows(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.by_distance.iter().flat_map(|(&d, v)| v.iter().map(move |&x| (d, x)))
    }
}

/// Random walk from a uniformly sampled start; every pair of walk
/// positions at most `window` apart contributes one (edit distance, L2)
/// observation.
pub fn l2_edit_profile(model: &Vgae, walk_len: usize, window: usize, seed: u64) -> Result<EditProfile, MetricsError> {
    let spec = &model.spec;
    let start = uniform_sample(spec, rng::derive(seed, &[0]))?;
    let walk = random_walk(&start, walk_len, spec, rng::derive(seed, &[1]))?;
    let emb = model.embed_all(&walk)?;
    let mut profile = EditProfile::default();
    for i in 0..walk.len() {
        for j in (i + 1)..walk.len().min(i + window + 1) {
            let d = edit_distance(&walk[i], &walk[j], spec)?;
            profile.by_distance.entry(d).or_default().push(l2(&emb[i], &emb[j]));
        }
    }
    Ok(profile)
}

/// Ids visited by a chain and the edit distances between consecutive cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborChain {
    pub ids: Vec<u64>,
    pub edit_distances: Vec<usize>,
}

impl NeighborChain {
    pub fn mean_edit_distance(&self) -> f64 {
        if self.edit_distances.is_empty() {
            return 0.0;
        }
        self.edit_distances.iter().sum::<usize>() as f64 / self.edit_distances.len() as f64
    }
}

pub fn chain_edit_distances(cells: &[&CellGraph], spec: &SearchSpaceSpec) -> Result<Vec<usize>, MetricsError> {
    cells.windows(2).map(|w| Ok(edit_distance(w[0], w[1], spec)?)).collect()
}

/// Greedy chain from `start_row`: each step moves to the nearest
/// embedding not yet on the chain.
pub fn neighbor_sequence(
    start_row: usize,
    index: &NeighborIndex,
    cells: &[CellGraph],
    spec: &SearchSpaceSpec,
    length: usize,
) -> Result<NeighborChain, MetricsError> {
    if length > index.len() || start_row >= index.len() {
        return Err(MetricsError::ExhaustedTable { needed: length.max(start_row + 1), available: index.len() });
    }
    let mut visited = vec![false; index.len()];
    let mut rows = vec![start_row];
    visited[start_row] = true;
    while rows.len() < length {
        let next = index.nearest_row(index.row(*rows.last().unwrap()), &visited)?;
        visited[next] = true;
        rows.push(next);
    }
    let seq: Vec<&CellGraph> = rows.iter().map(|&r| &cells[r]).collect();
    Ok(NeighborChain {
        ids: rows.iter().map(|&r| index.id(r)).collect(),
        edit_distances: chain_edit_distances(&seq, spec)?,
    })
}

/// Chain of `length` distinct rows starting at `start_row`, the rest drawn
/// uniformly at random.
pub fn random_chain(
    start_row: usize,
    index: &NeighborIndex,
    cells: &[CellGraph],
    spec: &SearchSpaceSpec,
    length: usize,
    seed: u64,
) -> Result<NeighborChain, MetricsError> {
    if length > index.len() || start_row >= index.len() {
        return Err(MetricsError::ExhaustedTable { needed: length.max(start_row + 1), available: index.len() });
    }
    let mut others: Vec<usize> = (0..index.len()).filter(|&r| r != start_row).collect();
    others.shuffle(&mut rng::substream(seed, "random-chain"));
    let rows: Vec<usize> =
        std::iter::once(start_row).chain(others.into_iter().take(length.saturating_sub(1))).collect();
    let seq: Vec<&CellGraph> = rows.iter().map(|&r| &cells[r]).collect();
    Ok(NeighborChain {
        ids: rows.iter().map(|&r| index.id(r)).collect(),
        edit_distances: chain_edit_distances(&seq, spec)?,
    })
}

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::SearchError;

/// Architecture ids with their embeddings (rows index-aligned).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    pub ids: Vec<u64>,
    pub embeddings: Vec<Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(ids: Vec<u64>, embeddings: Vec<Vec<f64>>) -> Result<Self, SearchError> {
        if ids.len() != embeddings.len() {
            return Err(SearchError::Dimension(format!("{} ids but {} embeddings", ids.len(), embeddings.len())));
        }
        let mut seen = HashSet::new();
        for &id in &ids {
            if !seen.insert(id) {
                return Err(SearchError::DuplicateId(id));
            }
        }
        if let Some(first) = embeddings.first() {
            if embeddings.iter().any(|e| e.len() != first.len()) {
                return Err(SearchError::Dimension("ragged embeddings".into()));
            }
        }
        Ok(Self { ids, embeddings })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.first().map_or(0, Vec::len)
    }
}

/// Exact brute-force L2 nearest-neighbour search.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    ids: Vec<u64>,
    dim: usize,
    flat: Vec<f64>,
}

pub fn build_index(table: &EmbeddingTable) -> Result<NeighborIndex, SearchError> {
    if table.is_empty() {
        return Err(SearchError::EmptyTable);
    }
    Ok(NeighborIndex { ids: table.ids.clone(), dim: table.dim(), flat: table.embeddings.concat() })
}

impl NeighborIndex {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn id(&self, row: usize) -> u64 {
        self.ids[row]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.flat[row * self.dim..(row + 1) * self.dim]
    }

    pub fn row_of(&self, id: u64) -> Option<usize> {
        self.ids.iter().position(|&x| x == id)
    }

    /// Row minimising the L2 distance to `z` among rows where `excluded`
    /// is false; ties go to the lowest id.
    pub fn nearest_row(&self, z: &[f64], excluded: &[bool]) -> Result<usize, SearchError> {
        if z.len() != self.dim {
            return Err(SearchError::Dimension(format!("query has {} dims, index {}", z.len(), self.dim)));
        }
        let mut best: Option<(f64, u64, usize)> = None;
        for r in 0..self.ids.len() {
            if excluded.get(r).copied().unwrap_or(false) {
                continue;
            }
            let d: f64 = self.row(r).iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
            let cand = (d, self.ids[r], r);
            if best.is_none_or(|(bd, bid, _)| d < bd || (d == bd && cand.1 < bid)) {
                best = Some(cand);
            }
        }
        best.map(|(_, _, r)| r).ok_or(SearchError::AllExcluded)
    }

    /// Id-level wrapper over [`Self::nearest_row`].
    pub fn nearest(&self, z: &[f64], excluded: &HashSet<u64>) -> Result<u64, SearchError> {
        let mask: Vec<bool> = self.ids.iter().map(|id| excluded.contains(id)).collect();
        Ok(self.ids[self.nearest_row(z, &mask)?])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn single_entry_and_self_queries() {
        let t = EmbeddingTable::new(vec![9], vec![vec![1.0, 2.0]]).unwrap();
        let idx = build_index(&t).unwrap();
        assert_eq!(idx.nearest(&[100.0, -3.0], &HashSet::new()).unwrap(), 9);
        let t = EmbeddingTable::new(vec![1, 2, 3], vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![5.0, 5.0]]).unwrap();
        let idx = build_index(&t).unwrap();
        assert_eq!(idx.nearest(&[1.0, 1.0], &HashSet::new()).unwrap(), 2);
        assert_eq!(idx.nearest(&[1.0, 1.0], &HashSet::from([1, 2])).unwrap(), 3);
        assert!(matches!(idx.nearest(&[0.0, 0.0], &HashSet::from([1, 2, 3])), Err(SearchError::AllExcluded)));
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let t = EmbeddingTable::new(vec![7, 3], vec![vec![1.0], vec![-1.0]]).unwrap();
        let idx = build_index(&t).unwrap();
        assert_eq!(idx.nearest(&[0.0], &HashSet::new()).unwrap(), 3);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(build_index(&EmbeddingTable::new(vec![], vec![]).unwrap()), Err(SearchError::EmptyTable)));
        assert!(matches!(
            EmbeddingTable::new(vec![1, 1], vec![vec![0.0], vec![1.0]]),
            Err(SearchError::DuplicateId(1))
        ));
        assert!(EmbeddingTable::new(vec![1, 2], vec![vec![0.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn matches_independent_scan() {
        let mut r = rng::seeded(4);
        let ids: Vec<u64> = (0..200).map(|i| i * 3 + 1).collect();
        let emb: Vec<Vec<f64>> = ids.iter().map(|_| (0..4).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        let t = EmbeddingTable::new(ids.clone(), emb.clone()).unwrap();
        let idx = build_index(&t).unwrap();
        for _ in 0..1000 {
            let z: Vec<f64> = (0..4).map(|_| r.random_range(-1.5..1.5)).collect();
            let excl: HashSet<u64> = ids.iter().copied().filter(|_| r.random_bool(0.3)).collect();
            let mut best = None;
            for (id, e) in ids.iter().zip(&emb) {
                if excl.contains(id) {
                    continue;
                }
                let d: f64 = e.iter().zip(&z).map(|(a, b)| (a - b).powi(2)).sum();
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, *id));
                }
            }
            assert_eq!(idx.nearest(&z, &excl).ok(), best.map(|b| b.1));
        }
    }
}

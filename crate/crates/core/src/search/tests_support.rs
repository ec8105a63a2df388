use rand::Rng;

use super::{build_index, EmbeddingTable, NeighborIndex, SearchSpace};
use crate::archspace::{enumerate, CellGraph, SearchSpaceSpec};
use crate::oracle::{AccuracyOracle, SyntheticOracle};
use crate::rng;

pub(crate) struct Fixture {
    pub index: NeighborIndex,
    pub cells: Vec<CellGraph>,
    pub oracle: SyntheticOracle,
}

impl Fixture {
    /// First `m` synthetic cells with random 16-dim embeddings.
    pub fn synthetic(m: usize) -> Self {
        let spec = SearchSpaceSpec::synthetic();
        let cells: Vec<CellGraph> = enumerate(&spec).unwrap().take(m).collect();
        let mut r = rng::seeded(77);
        let emb = cells.iter().map(|_| (0..16).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        let table = EmbeddingTable::new((0..cells.len() as u64).collect(), emb).unwrap();
        Self { index: build_index(&table).unwrap(), cells, oracle: SyntheticOracle::new(&spec) }
    }

    pub fn space(&self) -> SearchSpace<'_> {
        SearchSpace::new(&self.index, &self.cells, &self.oracle).unwrap()
    }

    pub fn best_validation(&self) -> f64 {
        self.cells.iter().map(|c| self.oracle.lookup(c).unwrap().validation_accuracy).fold(f64::MIN, f64::max)
    }
}

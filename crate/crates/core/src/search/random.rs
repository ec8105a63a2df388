use rand::seq::SliceRandom;

use super::trace::Run;
use super::{Budget, SearchError, SearchSpace, SearchTrace};
use crate::rng;

/// Queries rows in a seeded uniform permutation until a budget runs out.
pub fn random_search(space: SearchSpace<'_>, budget: &Budget, seed: u64) -> Result<SearchTrace, SearchError> {
    let mut run = Run::new(space, budget)?;
    let mut order: Vec<usize> = (0..space.index.len()).collect();
    order.shuffle(&mut rng::substream(seed, "random-search"));
    for row in order {
        if run.query(row)?.is_none() {
            break;
        }
    }
    Ok(run.finish())
}

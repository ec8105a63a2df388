use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::archspace::{canonical_hash, validate, CellGraph, SearchSpaceSpec};
use crate::rng;
use crate::tensor::Tensor;
use crate::vgae::{standard_normal, Batch, Vgae};

/// Percentage of `cells` that decode back to themselves from the
/// eval-mode posterior mean.
pub fn reconstruction_accuracy(model: &Vgae, cells: &[&CellGraph]) -> Result<f64, MetricsError> {
    if cells.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let ok = model.reconstructs(cells)?.into_iter().filter(|&b| b).count();
    Ok(100.0 * ok as f64 / cells.len() as f64)
}

/// Per-node, per-dimension mean and standard deviation of the posterior
/// means over a set of cells (each `N×d`).
#[derive(Debug, Clone, PartialEq)]
pub struct LatentStats {
    pub mean: Tensor,
    pub std: Tensor,
}

pub fn latent_stats(model: &Vgae, cells: &[&CellGraph]) -> Result<LatentStats, MetricsError> {
    if cells.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let (n, d) = (model.spec.max_nodes, model.latent_dim());
    let mut sum = vec![0.0; n * d];
    let mut sq = vec![0.0; n * d];
    for chunk in cells.chunks(256) {
        let batch = Batch::new(chunk, &model.spec, model.variant.aggregation())?;
        let (mu, _) = model.encode_batch(&batch)?;
        for (k, v) in mu.data().iter().enumerate() {
            sum[k % (n * d)] += v;
            sq[k % (n * d)] += v * v;
        }
    }
    let m = cells.len() as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / m).collect();
    let std: Vec<f64> = sq.iter().zip(&mean).map(|(s, mu)| (s / m - mu * mu).max(0.0).sqrt()).collect();
    Ok(LatentStats { mean: Tensor::matrix(n, d, mean)?, std: Tensor::matrix(n, d, std)? })
}

/// Outcome of decoding draws from the rescaled prior.
#[derive(Debug, Clone)]
pub struct PriorDraws {
    pub drawn: usize,
    /// decodes that pass every validity rule, in draw order
    pub valid: Vec<CellGraph>,
}

impl PriorDraws {
    pub fn validity_pct(&self) -> f64 {
        100.0 * self.valid.len() as f64 / self.drawn as f64
    }
}

/// Decodes `n` points `z = ε ⊙ std + mean` with `ε ~ N(0, I)`.
pub fn prior_samples(model: &Vgae, stats: &LatentStats, n: usize, seed: u64) -> Result<PriorDraws, MetricsError> {
    if n == 0 {
        return Err(MetricsError::EmptySet);
    }
    let decoded: Vec<Option<CellGraph>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let eps = standard_normal(stats.mean.shape(), rng::derive(seed, &[i as u64]));
            let z = eps.hadamard(&stats.std)?.add(&stats.mean)?;
            Ok(model.decode_point(&z).ok().filter(|c| validate(c, &model.spec).valid))
        })
        .collect::<Result<_, MetricsError>>()?;
    Ok(PriorDraws { drawn: n, valid: decoded.into_iter().flatten().collect() })
}

pub fn prior_validity(model: &Vgae, stats: &LatentStats, n: usize, seed: u64) -> Result<f64, MetricsError> {
    Ok(prior_samples(model, stats, n, seed)?.validity_pct())
}

/// Percentage of distinct isomorphism classes among valid cells.
pub fn uniqueness(valid: &[CellGraph], spec: &SearchSpaceSpec) -> Result<f64, MetricsError> {
    if valid.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let keys: HashSet<_> = valid.iter().map(|c| canonical_hash(c, spec)).collect::<Result<_, _>>()?;
    Ok(100.0 * keys.len() as f64 / valid.len() as f64)
}

/// Whether two non-adjacent nodes of the cell end colour refinement on the
/// undirected labelled graph with the same colour. Message-passing
/// encoders give such nodes identical latents, which an inner-product
/// decoder reads as an edge.
pub fn wl_ambiguous(cell: &CellGraph) -> bool {
    let n = cell.num_nodes();
    let nbrs: Vec<Vec<usize>> = (0..n).map(|i| cell.predecessors(i).chain(cell.successors(i)).collect()).collect();
    let mut colour: Vec<usize> = cell.ops().to_vec();
    loop {
        let sigs: Vec<(usize, Vec<usize>)> = (0..n)
            .map(|i| {
                let mut m: Vec<usize> = nbrs[i].iter().map(|&j| colour[j]).collect();
                m.sort_unstable();
                (colour[i], m)
            })
            .collect();
        let mut ids = BTreeMap::new();
        for s in &sigs {
            let next = ids.len();
            ids.entry(s.clone()).or_insert(next);
        }
        let refined: Vec<usize> = sigs.iter().map(|s| ids[s]).collect();
        let before = colour.iter().collect::<HashSet<_>>().len();
        colour = refined;
        if ids.len() == before {
            break;
        }
    }
    (0..n).any(|i| ((i + 1)..n).any(|j| colour[i] == colour[j] && !cell.has_edge(i, j)))
}

/// Reconstruction, prior validity and uniqueness of one trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainReport {
    pub variant: String,
    pub reconstruction_accuracy_pct: f64,
    pub validity_pct: f64,
    /// `None` when no prior draw decoded to a valid cell
    pub uniqueness_pct: Option<f64>,
    pub n_heldout: usize,
    pub n_prior: usize,
    pub n_valid: usize,
}

/// Scaling statistics come from `train`; reconstruction is measured on `heldout`.
pub fn pretrain_report(
    model: &Vgae,
    train: &[&CellGraph],
    heldout: &[&CellGraph],
    n_prior: usize,
    seed: u64,
) -> Result<PretrainReport, MetricsError> {
    let recon = reconstruction_accuracy(model, heldout)?;
    let stats = latent_stats(model, train)?;
    let draws = prior_samples(model, &stats, n_prior, seed)?;
    let uniq = if draws.valid.is_empty() { None } else { Some(uniqueness(&draws.valid, &model.spec)?) };
    Ok(PretrainReport {
        variant: model.variant.label().to_string(),
        reconstruction_accuracy_pct: recon,
        validity_pct: draws.validity_pct(),
        uniqueness_pct: uniq,
        n_heldout: heldout.len(),
        n_prior,
        n_valid: draws.valid.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archspace::{encode_cell, enumerate};
    use crate::vgae::{EncoderConfig, Variant};

    fn model() -> Vgae {
        let enc = EncoderConfig { hidden: vec![16, 8], epsilon_trainable: true };
        Vgae::new(&SearchSpaceSpec::synthetic(), &enc, Variant::GinVariational, 1).unwrap()
    }

    #[test]
    fn accuracy_agrees_with_independent_recount() {
        let m = model();
        let spec = SearchSpaceSpec::synthetic();
        let cells: Vec<CellGraph> = enumerate(&spec).unwrap().take(120).collect();
        let refs: Vec<&CellGraph> = cells.iter().collect();
        let pct = reconstruction_accuracy(&m, &refs).unwrap();
        let mut hits = 0;
        for c in &cells {
            let (mu, _) = m.encode(c).unwrap();
            if let Ok(d) = m.decode_point(&mu) {
                let (a, b) = (encode_cell(&d, &spec).unwrap(), encode_cell(c, &spec).unwrap());
                hits += usize::from(a == b);
            }
        }
        assert_eq!(pct, 100.0 * hits as f64 / cells.len() as f64);
        assert!(matches!(reconstruction_accuracy(&m, &[]), Err(MetricsError::EmptySet)));
    }

    #[test]
    fn collapsed_prior_is_fully_valid() {
        let mut m = model();
        let spec = SearchSpaceSpec::synthetic();
        let target = CellGraph::new(vec![0, 1, 4], &[(0, 1), (1, 2)]).unwrap();
        let d = m.latent_dim();
        // op decoder that reads the label straight off the first latent coordinates
        let mut w = Tensor::zeros(&[d, spec.num_ops()]);
        for k in 0..spec.num_ops() {
            w.set(k, k, 50.0);
        }
        *m.params.value_mut("decoder.ops.weight").unwrap() = w;
        *m.params.value_mut("decoder.ops.bias").unwrap() = Tensor::zeros(&[spec.num_ops()]);
        let mut mean = Tensor::zeros(&[5, d]);
        let rows: [&[(usize, f64)]; 5] = [
            &[(0, 1.0), (5, 1.0)],
            &[(1, 1.0), (5, 1.0), (6, 1.0)],
            &[(4, 1.0), (6, 1.0)],
            &[(0, 1.0), (7, 1.0)],
            &[(0, 1.0)],
        ];
        for (i, row) in rows.iter().enumerate() {
            for &(k, v) in *row {
                mean.set(i, k, v);
            }
        }
        let stats = LatentStats { std: Tensor::zeros(&[5, d]), mean };
        assert_eq!(m.decode_point(&stats.mean).unwrap(), target);
        let draws = prior_samples(&m, &stats, 50, 0).unwrap();
        assert_eq!(draws.validity_pct(), 100.0);
        assert_eq!(uniqueness(&draws.valid, &spec).unwrap(), 2.0);
    }

    #[test]
    fn prior_validity_is_deterministic() {
        let m = model();
        let spec = SearchSpaceSpec::synthetic();
        let cells: Vec<CellGraph> = enumerate(&spec).unwrap().take(64).collect();
        let refs: Vec<&CellGraph> = cells.iter().collect();
        let stats = latent_stats(&m, &refs).unwrap();
        let a = prior_validity(&m, &stats, 300, 5).unwrap();
        let b = prior_validity(&m, &stats, 300, 5).unwrap();
        assert_eq!(a, b);
        assert!((0.0..=100.0).contains(&a));
    }

    #[test]
    fn uniqueness_matches_pairwise_grouping() {
        let spec = SearchSpaceSpec::synthetic();
        let all: Vec<CellGraph> = enumerate(&spec).unwrap().collect();
        let mut r = rng::seeded(8);
        // relabelled copies of a few classes
        let mut cells = Vec::new();
        for _ in 0..500 {
            use rand::Rng;
            let c = &all[r.random_range(0..40)];
            let n = c.num_nodes();
            let mut perm: Vec<usize> = (0..n).collect();
            if n > 3 {
                perm.swap(1, 2);
            }
            cells.push(c.permuted(&perm).unwrap_or_else(|| c.clone()));
        }
        let mut groups: Vec<&CellGraph> = Vec::new();
        for c in &cells {
            let iso = |a: &CellGraph, b: &CellGraph| {
                let n = a.num_nodes();
                if n != b.num_nodes() {
                    return false;
                }
                use itertools::Itertools;
                (1..n - 1).permutations(n - 2).any(|p| {
                    let mut full = vec![0];
                    full.extend(p);
                    full.push(n - 1);
                    a.permuted(&full).as_ref() == Some(b)
                })
            };
            if !groups.iter().any(|g| iso(g, c)) {
                groups.push(c);
            }
        }
        let u = uniqueness(&cells, &spec).unwrap();
        assert!((u - 100.0 * groups.len() as f64 / 500.0).abs() < 1e-12);
        assert_eq!(uniqueness(&cells[..1], &spec).unwrap(), 100.0);
    }

    #[test]
    fn ambiguity_detector() {
        // two parallel identical branches: symmetric, non-adjacent
        let twin = CellGraph::new(vec![0, 1, 1, 4], &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        assert!(wl_ambiguous(&twin));
        let chain = CellGraph::new(vec![0, 1, 2, 4], &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert!(!wl_ambiguous(&chain));
        let mixed = CellGraph::new(vec![0, 1, 2, 4], &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        assert!(!wl_ambiguous(&mixed));
    }
}

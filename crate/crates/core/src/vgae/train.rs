use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Batch, EncoderConfig, TrainHyper, Variant, Vgae, VgaeError};
use crate::archspace::{CellGraph, SearchSpaceSpec};
use crate::rng;

/// One line of the training history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub recon: f64,
    pub kl: f64,
    /// percentage of held-out cells decoded exactly; `None` without a held-out set
    pub heldout_recon_acc: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Vgae,
    pub history: Vec<EpochRecord>,
    pub train_idx: Vec<usize>,
    pub heldout_idx: Vec<usize>,
}

/// Seeded shuffle of `0..len` split into (train, held-out).
pub fn split_dataset(len: usize, heldout_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(&mut rng::substream(seed, "split"));
    let held = ((len as f64) * heldout_fraction).round() as usize;
    let train = idx.split_off(held.min(len));
    (train, idx)
}

impl Vgae {
    /// Whether each cell decodes back to itself from its eval-mode mean.
    pub fn reconstructs(&self, cells: &[&CellGraph]) -> Result<Vec<bool>, VgaeError> {
        let n = self.spec.max_nodes;
        let mut out = Vec::with_capacity(cells.len());
        for chunk in cells.chunks(256) {
            let batch = Batch::new(chunk, &self.spec, self.variant.aggregation())?;
            let (mu, _) = self.encode_batch(&batch)?;
            let d = mu.cols();
            for (b, cell) in chunk.iter().enumerate() {
                let z = crate::tensor::Tensor::matrix(n, d, mu.data()[b * n * d..(b + 1) * n * d].to_vec())?;
                out.push(self.decode_point(&z)? == **cell);
            }
        }
        Ok(out)
    }
}

/// Mini-batch Adam on the negative ELBO with a seeded 90/10-style split.
pub fn train(
    dataset: &[CellGraph],
    spec: &SearchSpaceSpec,
    encoder: &EncoderConfig,
    variant: Variant,
    hyper: &TrainHyper,
) -> Result<TrainOutcome, VgaeError> {
    hyper.check()?;
    let (train_idx, heldout_idx) = split_dataset(dataset.len(), hyper.heldout_fraction, hyper.seed);
    if train_idx.is_empty() {
        return Err(VgaeError::EmptyDataset);
    }
    let mut model = Vgae::new(spec, encoder, variant, hyper.seed)?;
    let heldout: Vec<&CellGraph> = heldout_idx.iter().map(|&i| &dataset[i]).collect();
    let mut order = train_idx.clone();
    let mut shuffle_rng = rng::substream(hyper.seed, "epoch-shuffle");
    let mut history = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut stale = 0;
    for epoch in 0..hyper.epochs {
        order.shuffle(&mut shuffle_rng);
        let (mut loss, mut recon, mut kl) = (0.0, 0.0, 0.0);
        for (bi, chunk) in order.chunks(hyper.batch_size).enumerate() {
            let cells: Vec<&CellGraph> = chunk.iter().map(|&i| &dataset[i]).collect();
            let batch = Batch::new(&cells, spec, variant.aggregation())?;
            let noise_seed = rng::derive(hyper.seed, &[epoch as u64, bi as u64]);
            let t = model.elbo(&batch, noise_seed, hyper.kl_weight)?;
            model.params.adam_update(hyper.lr)?;
            let w = chunk.len() as f64;
            loss += t.loss * w;
            recon += t.recon * w;
            kl += t.kl * w;
        }
        let m = order.len() as f64;
        let acc = if heldout.is_empty() {
            None
        } else {
            let ok = model.reconstructs(&heldout)?.iter().filter(|&&b| b).count();
            Some(100.0 * ok as f64 / heldout.len() as f64)
        };
        history.push(EpochRecord { epoch, loss: loss / m, recon: recon / m, kl: kl / m, heldout_recon_acc: acc });
        if let (Some(p), Some(a)) = (hyper.patience, acc) {
            if a > best {
                best = a;
                stale = 0;
            } else {
                stale += 1;
                if stale >= p {
                    break;
                }
            }
        }
    }
    Ok(TrainOutcome { model, history, train_idx, heldout_idx })
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pretrain::{pretrain_report, PretrainReport};
use super::MetricsError;
use crate::archspace::{CellGraph, SearchSpaceSpec};
use crate::vgae::{train, EncoderConfig, TrainHyper, Variant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: Variant,
    pub seed: u64,
    pub report: PretrainReport,
}

/// Trains every variant with identical settings for each seed and reports
/// the three pre-training metrics.
pub fn ablation_suite(
    dataset: &[CellGraph],
    spec: &SearchSpaceSpec,
    encoder: &EncoderConfig,
    hyper: &TrainHyper,
    variants: &[Variant],
    seeds: &[u64],
    n_prior: usize,
) -> Result<Vec<AblationRow>, MetricsError> {
    let jobs: Vec<(Variant, u64)> = variants.iter().flat_map(|&v| seeds.iter().map(move |&s| (v, s))).collect();
    jobs.par_iter()
        .map(|&(variant, seed)| {
            let h = TrainHyper { seed, ..hyper.clone() };
            let out = train(dataset, spec, encoder, variant, &h)?;
            let tr: Vec<&CellGraph> = out.train_idx.iter().map(|&i| &dataset[i]).collect();
            let ho: Vec<&CellGraph> = out.heldout_idx.iter().map(|&i| &dataset[i]).collect();
            let report = pretrain_report(&out.model, &tr, &ho, n_prior, seed)?;
            Ok(AblationRow { variant, seed, report })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archspace::enumerate;

    #[test]
    fn every_variant_reports_in_range() {
        let spec = SearchSpaceSpec::synthetic();
        let data: Vec<CellGraph> = enumerate(&spec).unwrap().take(80).collect();
        let enc = EncoderConfig { hidden: vec![16, 8], epsilon_trainable: true };
        let hyper = TrainHyper { epochs: 2, ..Default::default() };
        let rows = ablation_suite(&data, &spec, &enc, &hyper, &Variant::ALL, &[0], 200).unwrap();
        assert_eq!(rows.len(), 4);
        for r in rows {
            let p = &r.report;
            assert_eq!(p.variant, r.variant.label());
            for v in [p.reconstruction_accuracy_pct, p.validity_pct] {
                assert!((0.0..=100.0).contains(&v));
            }
            if let Some(u) = p.uniqueness_pct {
                assert!((0.0..=100.0).contains(&u));
            }
        }
    }
}

use proptest::prelude::*;

use latentnas::archspace::{enumerate, CellGraph, SearchSpaceSpec};
use latentnas::metrics::{
    latent_stats, median, prior_samples, reconstruction_accuracy, sign_test, spearman, uniqueness,
};
use latentnas::vgae::{EncoderConfig, Variant, Vgae};

#[test]
fn pretrain_percentages_are_in_range_and_repeatable() {
    let spec = SearchSpaceSpec::synthetic();
    let cells: Vec<CellGraph> = enumerate(&spec).unwrap().collect();
    let refs: Vec<&CellGraph> = cells.iter().step_by(5).collect();
    let model = Vgae::new(&spec, &EncoderConfig::default(), Variant::GinVariational, 11).unwrap();
    let rec = reconstruction_accuracy(&model, &refs).unwrap();
    assert!((0.0..=100.0).contains(&rec));
    assert_eq!(rec, reconstruction_accuracy(&model, &refs).unwrap());
    let stats = latent_stats(&model, &refs).unwrap();
    assert!(stats.std.data().iter().all(|&s| s >= 0.0));
    let a = prior_samples(&model, &stats, 500, 4).unwrap();
    let b = prior_samples(&model, &stats, 500, 4).unwrap();
    assert_eq!(a.valid, b.valid);
    assert!((0.0..=100.0).contains(&a.validity_pct()));
    if !a.valid.is_empty() {
        let u = uniqueness(&a.valid, &spec).unwrap();
        assert!(u > 0.0 && u <= 100.0);
    }
    assert_eq!(uniqueness(&cells, &spec).unwrap(), 100.0);
}

proptest! {
    #[test]
    fn spearman_is_bounded_and_rank_invariant(xs in prop::collection::vec(-10.0..10.0f64, 3..30), shift in -5.0..5.0f64) {
        let ys: Vec<f64> = xs.iter().map(|x| x * x * x).collect();
        if let Some(r) = spearman(&xs, &ys) {
            prop_assert!((r - 1.0).abs() <= 1e-12);
        }
        let zs: Vec<f64> = xs.iter().rev().map(|x| x + shift).collect();
        if let Some(r) = spearman(&xs, &zs) {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
        }
    }

    #[test]
    fn median_splits_the_sample(xs in prop::collection::vec(-10.0..10.0f64, 1..40)) {
        let m = median(&xs).unwrap();
        let below = xs.iter().filter(|&&x| x < m).count();
        let above = xs.iter().filter(|&&x| x > m).count();
        prop_assert!(below <= xs.len() / 2 && above <= xs.len() / 2);
    }

    #[test]
    fn sign_test_is_a_decreasing_tail(trials in 1usize..60) {
        let p: Vec<f64> = (0..=trials).map(|w| sign_test(w, trials)).collect();
        prop_assert_eq!(p[0], 1.0);
        prop_assert!(p.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!((p[trials] - 0.5f64.powi(trials as i32)).abs() <= 1e-12);
    }
}

use proptest::prelude::*;
use rand::Rng;

use latentnas::rng;
use latentnas::tensor::{
    batchnorm, batchnorm_backward, linear, linear_backward, lstm_step, lstm_step_backward, row_softmax, Activation,
    BatchNormState, LstmParams, Mode, ParamStore, Tensor,
};

fn random(r: &mut rng::Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::matrix(rows, cols, (0..rows * cols).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap()
}

fn dot(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

/// Largest relative gap between `analytic` and central differences (step
/// `eps`) of `loss` with respect to every entry of `at`; gradients below 1e-4 are
/// judged on absolute error.
fn fd_gap(at: &Tensor, analytic: &Tensor, eps: f64, loss: impl Fn(&Tensor) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..at.len() {
        let mut p = at.clone();
        p.data_mut()[i] += eps;
        let lp = loss(&p);
        p.data_mut()[i] -= 2.0 * eps;
        let lm = loss(&p);
        let num = (lp - lm) / (2.0 * eps);
        let a = analytic.data()[i];
        worst = worst.max((a - num).abs() / a.abs().max(num.abs()).max(1e-4));
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linear_backward_matches_differences(b in 1usize..6, i in 1usize..6, o in 1usize..6, seed in any::<u64>()) {
        let mut r = rng::seeded(seed);
        let (x, w, bias, g) = (random(&mut r, b, i), random(&mut r, i, o), Tensor::vector((0..o).map(|_| r.random_range(-1.0..1.0)).collect()), random(&mut r, b, o));
        let (gx, gw, gb) = linear_backward(&x, &w, &g).unwrap();
        prop_assert!(fd_gap(&x, &gx, 1e-3, |p| dot(&linear(p, &w, &bias).unwrap(), &g)) < 1e-6);
        prop_assert!(fd_gap(&w, &gw, 1e-3, |p| dot(&linear(&x, p, &bias).unwrap(), &g)) < 1e-6);
        prop_assert!(fd_gap(&bias, &gb, 1e-3, |p| dot(&linear(&x, &w, p).unwrap(), &g)) < 1e-6);
    }

    #[test]
    fn activation_backward_matches_differences(b in 1usize..6, f in 1usize..7, seed in any::<u64>()) {
        let mut r = rng::seeded(seed);
        let (x, g) = (random(&mut r, b, f), random(&mut r, b, f));
        for act in [Activation::Relu, Activation::Sigmoid, Activation::RowSoftmax] {
            let y = act.forward(&x);
            let gx = act.backward(&x, &y, &g).unwrap();
            let gap = fd_gap(&x, &gx, 1e-6, |p| dot(&act.forward(p), &g));
            prop_assert!(gap < 1e-5, "{act:?}: {gap}");
        }
    }

    #[test]
    fn batchnorm_backward_matches_differences(b in 2usize..7, f in 1usize..6, seed in any::<u64>()) {
        let mut r = rng::seeded(seed);
        let (x, g) = (random(&mut r, b, f), random(&mut r, b, f));
        let gamma = Tensor::vector((0..f).map(|_| r.random_range(0.5..1.5)).collect());
        let beta = Tensor::vector((0..f).map(|_| r.random_range(-0.5..0.5)).collect());
        for mode in [Mode::Train, Mode::Eval] {
            let mut state = BatchNormState::new(f);
            state.running_mean.iter_mut().for_each(|m| *m = 0.1);
            let fresh = state.clone();
            let fwd = |x: &Tensor, gm: &Tensor, bt: &Tensor| {
                let mut s = fresh.clone();
                dot(&batchnorm(x, gm, bt, &mut s, mode).unwrap().0, &g)
            };
            let (_, cache) = batchnorm(&x, &gamma, &beta, &mut state, mode).unwrap();
            let (gx, gg, gb) = batchnorm_backward(&cache, &gamma, &g).unwrap();
            prop_assert!(fd_gap(&x, &gx, 1e-6, |p| fwd(p, &gamma, &beta)) < 1e-5, "{mode:?}");
            prop_assert!(fd_gap(&gamma, &gg, 1e-6, |p| fwd(&x, p, &beta)) < 1e-5, "{mode:?}");
            prop_assert!(fd_gap(&beta, &gb, 1e-6, |p| fwd(&x, &gamma, p)) < 1e-5, "{mode:?}");
        }
    }

    #[test]
    fn lstm_backward_matches_differences(b in 1usize..4, i in 1usize..5, h in 1usize..5, seed in any::<u64>()) {
        let mut r = rng::seeded(seed);
        let (x, h0, c0) = (random(&mut r, b, i), random(&mut r, b, h), random(&mut r, b, h));
        let (w_ih, w_hh) = (random(&mut r, i, 4 * h), random(&mut r, h, 4 * h));
        let bias = Tensor::vector((0..4 * h).map(|_| r.random_range(-1.0..1.0)).collect());
        let (gh, gc) = (random(&mut r, b, h), random(&mut r, b, h));
        let loss = |x: &Tensor, h0: &Tensor, c0: &Tensor, wi: &Tensor, wh: &Tensor, bb: &Tensor| {
            let (h1, c1, _) = lstm_step(x, h0, c0, LstmParams { w_ih: wi, w_hh: wh, b: bb }).unwrap();
            dot(&h1, &gh) + dot(&c1, &gc)
        };
        let p = LstmParams { w_ih: &w_ih, w_hh: &w_hh, b: &bias };
        let (_, _, cache) = lstm_step(&x, &h0, &c0, p).unwrap();
        let gr = lstm_step_backward(&cache, p, &gh, &gc).unwrap();
        prop_assert!(fd_gap(&x, &gr.x, 1e-6, |t| loss(t, &h0, &c0, &w_ih, &w_hh, &bias)) < 1e-5);
        prop_assert!(fd_gap(&h0, &gr.h, 1e-6, |t| loss(&x, t, &c0, &w_ih, &w_hh, &bias)) < 1e-5);
        prop_assert!(fd_gap(&c0, &gr.c, 1e-6, |t| loss(&x, &h0, t, &w_ih, &w_hh, &bias)) < 1e-5);
        prop_assert!(fd_gap(&w_ih, &gr.w_ih, 1e-6, |t| loss(&x, &h0, &c0, t, &w_hh, &bias)) < 1e-5);
        prop_assert!(fd_gap(&w_hh, &gr.w_hh, 1e-6, |t| loss(&x, &h0, &c0, &w_ih, t, &bias)) < 1e-5);
        prop_assert!(fd_gap(&bias, &gr.b, 1e-6, |t| loss(&x, &h0, &c0, &w_ih, &w_hh, t)) < 1e-5);
    }

    #[test]
    fn softmax_rows_are_distributions(rows in 1usize..6, vals in prop::collection::vec(-700.0..700.0f64, 1..40)) {
        let cols = vals.len().div_ceil(rows);
        let mut data = vals.clone();
        data.resize(rows * cols, 0.0);
        let y = row_softmax(&Tensor::matrix(rows, cols, data).unwrap());
        for i in 0..rows {
            prop_assert!(y.row(i).iter().all(|&v| v >= 0.0));
            prop_assert!((y.row(i).iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn adam_is_deterministic(seed in any::<u64>(), steps in 1usize..5) {
        let mut r = rng::seeded(seed);
        let w = random(&mut r, 3, 4);
        let grads: Vec<Tensor> = (0..steps).map(|_| random(&mut r, 3, 4)).collect();
        let run = || {
            let mut s = ParamStore::new();
            s.insert("w", w.clone()).unwrap();
            for g in &grads {
                s.accumulate_grad("w", g).unwrap();
                s.adam_update(1e-2).unwrap();
            }
            s
        };
        let (a, b) = (run(), run());
        prop_assert_eq!(a.value("w").unwrap().data(), b.value("w").unwrap().data());
        prop_assert_eq!(a.step(), steps as u64);
    }
}

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::trace::Run;
use super::{expected_improvement, fit_blr, Budget, SearchError, SearchSpace, SearchTrace};
use crate::rng;
use crate::tensor::{linear, linear_backward, uniform_init, ParamStore, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DngoHyper {
    pub basis_hidden: usize,
    pub top_k: usize,
    pub retrain_epochs: usize,
    /// EI reference value; ignored when `running_incumbent` is set
    pub ei_incumbent: f64,
    pub running_incumbent: bool,
    pub init_samples: usize,
    pub lr: f64,
    pub minibatch: usize,
}

impl Default for DngoHyper {
    fn default() -> Self {
        Self {
            basis_hidden: 128,
            top_k: 5,
            retrain_epochs: 100,
            ei_incumbent: 0.95,
            running_incumbent: false,
            init_samples: 16,
            lr: 1e-2,
            minibatch: 32,
        }
    }
}

impl DngoHyper {
    pub fn check(&self) -> Result<(), SearchError> {
        let bad = |m: &str| Err(SearchError::Config(m.to_string()));
        if self.top_k == 0 || self.basis_hidden == 0 || self.minibatch == 0 || self.init_samples == 0 {
            return bad("top_k, basis_hidden, minibatch and init_samples must be positive");
        }
        if !(self.ei_incumbent > 0.0 && self.ei_incumbent <= 1.0) {
            return bad("ei_incumbent must lie in (0, 1]");
        }
        if !(self.lr > 0.0) {
            return bad("lr must be positive");
        }
        Ok(())
    }
}

/// Column-standardised copy of the embedding table.
fn standardize(space: &SearchSpace<'_>) -> Vec<Vec<f64>> {
    let (m, d) = (space.index.len(), space.index.dim());
    let mut mean = vec![0.0; d];
    let mut var = vec![0.0; d];
    for r in 0..m {
        for (k, v) in space.index.row(r).iter().enumerate() {
            mean[k] += v / m as f64;
        }
    }
    for r in 0..m {
        for (k, v) in space.index.row(r).iter().enumerate() {
            var[k] += (v - mean[k]).powi(2) / m as f64;
        }
    }
    let sd: Vec<f64> = var.iter().map(|v| if *v > 0.0 { v.sqrt() } else { 1.0 }).collect();
    (0..m).map(|r| space.index.row(r).iter().enumerate().map(|(k, v)| (v - mean[k]) / sd[k]).collect()).collect()
}

/// One-hidden-layer tanh regressor whose hidden layer serves as the basis.
struct BasisNet {
    params: ParamStore,
}

impl BasisNet {
    fn new(dim: usize, hidden: usize, seed: u64) -> Self {
        let mut r = rng::seeded(seed);
        let mut params = ParamStore::new();
        for (name, t) in [
            ("hidden.weight", uniform_init(&mut r, &[dim, hidden], dim)),
            ("hidden.bias", uniform_init(&mut r, &[hidden], dim)),
            ("out.weight", uniform_init(&mut r, &[hidden, 1], hidden)),
            ("out.bias", uniform_init(&mut r, &[1], hidden)),
        ] {
            params.insert(name, t).expect("fresh name");
        }
        Self { params }
    }

    fn basis(&self, x: &Tensor) -> Result<Tensor, SearchError> {
        let p = &self.params;
        Ok(linear(x, p.value("hidden.weight")?, p.value("hidden.bias")?)?.map(f64::tanh))
    }

    /// Accumulates the gradient of the mean squared error on one minibatch.
    fn mse_grad(&mut self, x: &Tensor, y: &[f64]) -> Result<f64, SearchError> {
        let phi = self.basis(x)?;
        let pred = linear(&phi, self.params.value("out.weight")?, self.params.value("out.bias")?)?;
        let b = y.len() as f64;
        let resid: Vec<f64> = pred.data().iter().zip(y).map(|(p, t)| p - t).collect();
        let loss = resid.iter().map(|r| r * r).sum::<f64>() / b;
        let g = Tensor::matrix(y.len(), 1, resid.iter().map(|r| 2.0 * r / b).collect())?;
        let (gphi, gw2, gb2) = linear_backward(&phi, self.params.value("out.weight")?, &g)?;
        let gpre = Tensor::new(
            gphi.shape().to_vec(),
            gphi.data().iter().zip(phi.data()).map(|(g, t)| g * (1.0 - t * t)).collect(),
        )?;
        let (_, gw1, gb1) = linear_backward(x, self.params.value("hidden.weight")?, &gpre)?;
        self.params.accumulate_grad("out.weight", &gw2)?;
        self.params.accumulate_grad("out.bias", &gb2)?;
        self.params.accumulate_grad("hidden.weight", &gw1)?;
        self.params.accumulate_grad("hidden.bias", &gb1)?;
        Ok(loss)
    }
}

fn rows_tensor(x: &[Vec<f64>], rows: &[usize]) -> Result<Tensor, SearchError> {
    let d = x[0].len();
    Ok(Tensor::matrix(rows.len(), d, rows.iter().flat_map(|&r| x[r].iter().copied()).collect())?)
}

/// Bayesian optimisation with an adaptive-basis regressor and a Bayesian
/// linear output layer, scored by expected improvement.
pub fn dngo_search(
    space: SearchSpace<'_>,
    budget: &Budget,
    hyper: &DngoHyper,
    seed: u64,
) -> Result<SearchTrace, SearchError> {
    hyper.check()?;
    let mut run = Run::new(space, budget)?;
    let m = space.index.len();
    let x = standardize(&space);
    let mut pool: Vec<(usize, f64)> = Vec::new();

    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng::substream(seed, "dngo-init"));
    for &row in order.iter().take(hyper.init_samples) {
        match run.query(row)? {
            Some(r) => pool.push((row, r)),
            None => break,
        }
    }

    let mut round = 0u64;
    while !run.done() {
        let n = pool.len() as f64;
        let y_mean = pool.iter().map(|p| p.1).sum::<f64>() / n;
        let y_var = pool.iter().map(|p| (p.1 - y_mean).powi(2)).sum::<f64>() / n;
        let y_sd = if y_var > 0.0 { y_var.sqrt() } else { 1.0 };
        let ys: Vec<f64> = pool.iter().map(|p| (p.1 - y_mean) / y_sd).collect();
        let rows: Vec<usize> = pool.iter().map(|p| p.0).collect();

        let mut net = BasisNet::new(space.index.dim(), hyper.basis_hidden, rng::derive(seed, &[round, 0]));
        let mut shuffle = rng::seeded(rng::derive(seed, &[round, 1]));
        let mut idx: Vec<usize> = (0..rows.len()).collect();
        for _ in 0..hyper.retrain_epochs {
            idx.shuffle(&mut shuffle);
            for chunk in idx.chunks(hyper.minibatch) {
                let xb = rows_tensor(&x, &chunk.iter().map(|&i| rows[i]).collect::<Vec<_>>())?;
                let yb: Vec<f64> = chunk.iter().map(|&i| ys[i]).collect();
                net.params.zero_grad();
                net.mse_grad(&xb, &yb)?;
                net.params.adam_update(hyper.lr)?;
            }
        }

        let with_bias = |phi: &Tensor| {
            let (r, c) = (phi.rows(), phi.cols());
            DMatrix::from_fn(r, c + 1, |i, j| if j == c { 1.0 } else { phi.get(i, j) })
        };
        let phi_train = with_bias(&net.basis(&rows_tensor(&x, &rows)?)?);
        let post = fit_blr(&phi_train, &ys)?;

        let candidates: Vec<usize> = (0..m).filter(|&r| !run.visited[r]).collect();
        if candidates.is_empty() {
            break;
        }
        let phi_all = with_bias(&net.basis(&rows_tensor(&x, &candidates)?)?);
        let incumbent = if hyper.running_incumbent {
            pool.iter().map(|p| p.1).fold(f64::MIN, f64::max)
        } else {
            hyper.ei_incumbent
        };
        let mut scored: Vec<(f64, f64, usize)> = candidates
            .iter()
            .enumerate()
            .map(|(i, &row)| {
                let feat: Vec<f64> = phi_all.row(i).iter().copied().collect();
                let (mu, var) = post.predict(&feat);
                let mu_y = mu * y_sd + y_mean;
                let sigma_y = var.sqrt() * y_sd;
                (expected_improvement(mu_y, sigma_y, incumbent), mu_y, row)
            })
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)).then(a.2.cmp(&b.2)));
        for &(_, _, row) in scored.iter().take(hyper.top_k) {
            match run.query(row)? {
                Some(r) => pool.push((row, r)),
                None => break,
            }
        }
        round += 1;
    }
    Ok(run.finish())
}

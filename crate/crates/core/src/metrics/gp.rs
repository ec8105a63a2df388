use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{mean_std, median, pearson};
use super::MetricsError;
use crate::rng;

pub const GP_NOISE_FLOOR: f64 = 1e-6;
pub const GP_MAX_JITTER: f64 = 1e-4;
const ASCENT_STEPS: usize = 100;
const ASCENT_LR: f64 = 0.05;
const LOG_BOUND: f64 = 12.0;

/// Exact GP regression with an RBF kernel on standardised targets.
#[derive(Debug, Clone)]
pub struct GpModel {
    x: Vec<Vec<f64>>,
    y_mean: f64,
    y_sd: f64,
    alpha: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    pub lengthscale: f64,
    pub signal_var: f64,
    /// in standardised target units
    pub noise_var: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn factor(mut k: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>, MetricsError> {
    let n = k.nrows();
    let mut jitter = 0.0;
    loop {
        if let Some(c) = k.clone().cholesky() {
            return Ok(c);
        }
        let next = if jitter == 0.0 { 1e-10 } else { jitter * 10.0 };
        if next > GP_MAX_JITTER * 1.000001 {
            return Err(MetricsError::SingularKernel(jitter));
        }
        for i in 0..n {
            k[(i, i)] += next - jitter;
        }
        jitter = next;
    }
}

fn kernel(d2: &DMatrix<f64>, ell: f64, sf2: f64) -> DMatrix<f64> {
    d2.map(|v| sf2 * (-0.5 * v / (ell * ell)).exp())
}

/// Log marginal likelihood and its gradient w.r.t. `(ln ℓ, ln σf², ln σn²)`.
fn lml_grad(d2: &DMatrix<f64>, y: &DVector<f64>, theta: [f64; 3]) -> Option<(f64, [f64; 3])> {
    let n = y.len();
    let (ell, sf2, sn2) = (theta[0].exp(), theta[1].exp(), theta[2].exp().max(GP_NOISE_FLOOR));
    let kf = kernel(d2, ell, sf2);
    let k = &kf + DMatrix::identity(n, n) * sn2;
    let chol = k.cholesky()?;
    let alpha = chol.solve(y);
    let logdet: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>() * 2.0;
    let lml = -0.5 * y.dot(&alpha) - 0.5 * logdet - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
    let w = &alpha * alpha.transpose() - chol.inverse();
    let (mut g_ell, mut g_sf, mut g_sn) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let wij = w[(i, j)];
            g_ell += wij * kf[(i, j)] * d2[(i, j)] / (ell * ell);
            g_sf += wij * kf[(i, j)];
        }
        g_sn += w[(i, i)] * sn2;
    }
    let out = (lml, [0.5 * g_ell, 0.5 * g_sf, 0.5 * g_sn]);
    (lml.is_finite() && out.1.iter().all(|g| g.is_finite())).then_some(out)
}

/// Fits kernel hyperparameters by Adam ascent on the log marginal
/// likelihood, keeping the best iterate; the median pairwise distance
/// seeds the length-scale and is the fallback if no iterate is finite.
pub fn fit_gp(x: &[Vec<f64>], y: &[f64]) -> Result<GpModel, MetricsError> {
    let n = y.len();
    if n == 0 || x.len() != n {
        return Err(MetricsError::Dimension(format!("{} inputs, {} targets", x.len(), n)));
    }
    let (y_mean, sd) = mean_std(y);
    let y_sd = if sd > 0.0 { sd } else { 1.0 };
    let ys = DVector::from_iterator(n, y.iter().map(|v| (v - y_mean) / y_sd));
    let d2 = DMatrix::from_fn(n, n, |i, j| sq_dist(&x[i], &x[j]));
    let dists: Vec<f64> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .map(|(i, j)| d2[(i, j)].sqrt())
        .filter(|&d| d > 0.0)
        .collect();
    let med = median(&dists).unwrap_or(1.0);

    let start = [med.ln(), 0.0, 0.1f64.ln()];
    let mut theta = start;
    let mut best: Option<(f64, [f64; 3])> = None;
    let (mut m, mut v) = ([0.0; 3], [0.0; 3]);
    for t in 1..=ASCENT_STEPS {
        let Some((lml, g)) = lml_grad(&d2, &ys, theta) else { break };
        if best.is_none_or(|(b, _)| lml > b) {
            best = Some((lml, theta));
        }
        for k in 0..3 {
            m[k] = 0.9 * m[k] + 0.1 * g[k];
            v[k] = 0.999 * v[k] + 0.001 * g[k] * g[k];
            let mh = m[k] / (1.0 - 0.9f64.powi(t as i32));
            let vh = v[k] / (1.0 - 0.999f64.powi(t as i32));
            theta[k] = (theta[k] + ASCENT_LR * mh / (vh.sqrt() + 1e-8)).clamp(-LOG_BOUND, LOG_BOUND);
        }
    }
    if let Some((lml, _)) = lml_grad(&d2, &ys, theta) {
        if best.is_none_or(|(b, _)| lml > b) {
            best = Some((lml, theta));
        }
    }
    let theta = best.map_or(start, |(_, t)| t);
    let (lengthscale, signal_var) = (theta[0].exp(), theta[1].exp());
    let noise_var = theta[2].exp().max(GP_NOISE_FLOOR);
    let k = kernel(&d2, lengthscale, signal_var) + DMatrix::identity(n, n) * noise_var;
    let chol = factor(k)?;
    let alpha = chol.solve(&ys);
    Ok(GpModel { x: x.to_vec(), y_mean, y_sd, alpha, chol, lengthscale, signal_var, noise_var })
}

impl GpModel {
    /// Predictive mean and latent-function variance in target units.
    pub fn predict(&self, xs: &[Vec<f64>]) -> Vec<(f64, f64)> {
        let ell2 = self.lengthscale * self.lengthscale;
        xs.iter()
            .map(|q| {
                let ks = DVector::from_iterator(
                    self.x.len(),
                    self.x.iter().map(|p| self.signal_var * (-0.5 * sq_dist(p, q) / ell2).exp()),
                );
                let mu = ks.dot(&self.alpha);
                let var = (self.signal_var - ks.dot(&self.chol.solve(&ks))).max(0.0);
                (mu * self.y_sd + self.y_mean, var * self.y_sd * self.y_sd)
            })
            .collect()
    }

    /// Noise standard deviation in target units.
    pub fn noise_sd(&self) -> f64 {
        self.noise_var.sqrt() * self.y_sd
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFit {
    pub seed: u64,
    pub rmse: f64,
    pub pearson_r: Option<f64>,
    pub n_eval: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveFit {
    pub n_train: usize,
    pub accuracy_floor: f64,
    pub seeds: Vec<u64>,
    pub rmse_mean: f64,
    pub rmse_std: f64,
    /// `None` when any seed's correlation is undefined
    pub pearson_mean: Option<f64>,
    pub pearson_std: Option<f64>,
    pub per_seed: Vec<SeedFit>,
}

/// Per seed: fit on `n_train` sampled points, predict the rest, score the
/// predictions whose target exceeds `floor`.
pub fn predictive_fit(
    embeddings: &[Vec<f64>],
    accuracies: &[f64],
    n_train: usize,
    floor: f64,
    seeds: &[u64],
) -> Result<PredictiveFit, MetricsError> {
    if embeddings.len() != accuracies.len() {
        return Err(MetricsError::Dimension(format!(
            "{} embeddings, {} accuracies",
            embeddings.len(),
            accuracies.len()
        )));
    }
    if seeds.is_empty() || n_train == 0 || n_train >= embeddings.len() {
        return Err(MetricsError::EmptySet);
    }
    let per_seed: Vec<SeedFit> = seeds
        .par_iter()
        .map(|&seed| {
            let mut idx: Vec<usize> = (0..embeddings.len()).collect();
            idx.shuffle(&mut rng::substream(seed, "gp-sample"));
            let (tr, rest) = idx.split_at(n_train);
            let x: Vec<Vec<f64>> = tr.iter().map(|&i| embeddings[i].clone()).collect();
            let y: Vec<f64> = tr.iter().map(|&i| accuracies[i]).collect();
            let gp = fit_gp(&x, &y)?;
            let eval: Vec<usize> = rest.iter().copied().filter(|&i| accuracies[i] > floor).collect();
            if eval.is_empty() {
                return Err(MetricsError::EmptySet);
            }
            let xs: Vec<Vec<f64>> = eval.iter().map(|&i| embeddings[i].clone()).collect();
            let pred: Vec<f64> = gp.predict(&xs).into_iter().map(|p| p.0).collect();
            let truth: Vec<f64> = eval.iter().map(|&i| accuracies[i]).collect();
            let mse = pred.iter().zip(&truth).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / truth.len() as f64;
            Ok(SeedFit { seed, rmse: mse.sqrt(), pearson_r: pearson(&pred, &truth), n_eval: eval.len() })
        })
        .collect::<Result<_, MetricsError>>()?;
    let (rmse_mean, rmse_std) = mean_std(&per_seed.iter().map(|s| s.rmse).collect::<Vec<_>>());
    let rs: Option<Vec<f64>> = per_seed.iter().map(|s| s.pearson_r).collect();
    let (pearson_mean, pearson_std) = match rs {
        Some(rs) => {
            let (m, s) = mean_std(&rs);
            (Some(m), Some(s))
        }
        None => (None, None),
    };
    Ok(PredictiveFit {
        n_train,
        accuracy_floor: floor,
        seeds: seeds.to_vec(),
        rmse_mean,
        rmse_std,
        pearson_mean,
        pearson_std,
        per_seed,
    })
}

use super::{mismatch, Tensor, TensorError};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Running statistics, updated in training mode.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormState {
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

impl BatchNormState {
    pub fn new(features: usize) -> Self {
        Self { running_mean: vec![0.0; features], running_var: vec![1.0; features] }
    }
}

#[derive(Debug, Clone)]
pub struct BatchNormCache {
    xhat: Tensor,
    inv_std: Vec<f64>,
    mode: Mode,
}

/// Normalises each column of `x: B×F`, then applies `gamma`, `beta`.
pub fn batchnorm(
    x: &Tensor,
    gamma: &Tensor,
    beta: &Tensor,
    state: &mut BatchNormState,
    mode: Mode,
) -> Result<(Tensor, BatchNormCache), TensorError> {
    let (b, f) = (x.rows(), x.cols());
    if gamma.len() != f || beta.len() != f || state.running_mean.len() != f || x.shape().len() != 2 {
        return Err(mismatch(format!(
            "batchnorm: x {:?}, gamma {:?}, beta {:?}",
            x.shape(),
            gamma.shape(),
            beta.shape()
        )));
    }
    let (mean, var) = match mode {
        Mode::Train => {
            if b < 2 {
                return Err(TensorError::DegenerateBatch(b));
            }
            let mut mean = vec![0.0; f];
            for i in 0..b {
                for (m, v) in mean.iter_mut().zip(x.row(i)) {
                    *m += v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= b as f64);
            let mut var = vec![0.0; f];
            for i in 0..b {
                for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                    *s += (v - m) * (v - m);
                }
            }
            var.iter_mut().for_each(|s| *s /= b as f64);
            let unbias = b as f64 / (b as f64 - 1.0);
            for j in 0..f {
                state.running_mean[j] = (1.0 - BN_MOMENTUM) * state.running_mean[j] + BN_MOMENTUM * mean[j];
                state.running_var[j] = (1.0 - BN_MOMENTUM) * state.running_var[j] + BN_MOMENTUM * var[j] * unbias;
            }
            (mean, var)
        }
        Mode::Eval => (state.running_mean.clone(), state.running_var.clone()),
    };
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
    let mut xhat = Tensor::zeros(&[b, f]);
    let mut y = Tensor::zeros(&[b, f]);
    for i in 0..b {
        for j in 0..f {
            let h = (x.get(i, j) - mean[j]) * inv_std[j];
            xhat.set(i, j, h);
            y.set(i, j, gamma.data()[j] * h + beta.data()[j]);
        }
    }
    Ok((y, BatchNormCache { xhat, inv_std, mode }))
}

/// Returns `(grad_x, grad_gamma, grad_beta)`.
pub fn batchnorm_backward(
    cache: &BatchNormCache,
    gamma: &Tensor,
    grad_out: &Tensor,
) -> Result<(Tensor, Tensor, Tensor), TensorError> {
    let xhat = &cache.xhat;
    if grad_out.shape() != xhat.shape() {
        return Err(mismatch("batchnorm_backward"));
    }
    let (b, f) = (xhat.rows(), xhat.cols());
    let mut ggamma = vec![0.0; f];
    let mut gbeta = vec![0.0; f];
    for i in 0..b {
        for j in 0..f {
            let g = grad_out.get(i, j);
            ggamma[j] += g * xhat.get(i, j);
            gbeta[j] += g;
        }
    }
    let mut gx = Tensor::zeros(&[b, f]);
    for j in 0..f {
        let gm = gamma.data()[j];
        match cache.mode {
            Mode::Eval => {
                for i in 0..b {
                    gx.set(i, j, grad_out.get(i, j) * gm * cache.inv_std[j]);
                }
            }
            Mode::Train => {
                // sums of dxhat and dxhat·xhat are gm·gbeta and gm·ggamma
                let bf = b as f64;
                for i in 0..b {
                    let dxhat = grad_out.get(i, j) * gm;
                    let v = cache.inv_std[j] / bf * (bf * dxhat - gm * gbeta[j] - xhat.get(i, j) * gm * ggamma[j]);
                    gx.set(i, j, v);
                }
            }
        }
    }
    Ok((gx, Tensor::vector(ggamma), Tensor::vector(gbeta)))
}

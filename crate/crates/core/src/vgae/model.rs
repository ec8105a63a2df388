use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{Aggregation, EncoderConfig, Variant, VgaeError};
use crate::archspace::{encode_cell, CellGraph, SearchSpaceSpec};
use crate::rng;
use crate::tensor::{
    batchnorm, batchnorm_backward, linear, linear_backward, relu, relu_backward, row_softmax, uniform_init,
    BatchNormCache, BatchNormState, Mode, ParamStore, Tensor,
};

/// Fixed-shape batch of padded cells, stacked node-major (`B·N` rows).
#[derive(Debug, Clone)]
pub struct Batch {
    pub size: usize,
    pub nodes: usize,
    /// one-hot operations, `B·N × K`
    pub x: Tensor,
    /// padded adjacency targets per cell, `N×N` strictly upper-triangular
    pub adjacency: Vec<Tensor>,
    /// aggregation operator per cell (`Ã` or the normalised GCN operator)
    pub agg: Vec<Tensor>,
    /// true operation per row, `None` on padding rows
    pub op_target: Vec<Option<usize>>,
}

/// `Ã = A + Aᵀ`; rejects entries on or below the diagonal.
pub fn augment_adjacency(a: &Tensor) -> Result<Tensor, VgaeError> {
    let n = a.rows();
    if a.shape() != [n, n] {
        return Err(VgaeError::Config(format!("adjacency must be square, got {:?}", a.shape())));
    }
    let mut out = Tensor::zeros(&[n, n]);
    for i in 0..n {
        for j in 0..n {
            let v = a.get(i, j);
            if v != 0.0 && j <= i {
                return Err(VgaeError::NotUpperTriangular { row: i, col: j });
            }
            if j > i {
                out.set(i, j, v);
                out.set(j, i, v);
            }
        }
    }
    Ok(out)
}

/// `D^{-1/2}(Ã+I)D^{-1/2}`.
pub fn gcn_operator(a_tilde: &Tensor) -> Tensor {
    let n = a_tilde.rows();
    let mut m = a_tilde.add(&Tensor::eye(n)).expect("square");
    let deg: Vec<f64> = (0..n).map(|i| m.row(i).iter().sum::<f64>()).collect();
    for i in 0..n {
        for j in 0..n {
            let v = m.get(i, j) / (deg[i] * deg[j]).sqrt();
            m.set(i, j, v);
        }
    }
    m
}

impl Batch {
    pub fn new(cells: &[&CellGraph], spec: &SearchSpaceSpec, aggregation: Aggregation) -> Result<Self, VgaeError> {
        if cells.is_empty() {
            return Err(VgaeError::EmptyDataset);
        }
        let (n, k) = (spec.max_nodes, spec.num_ops());
        let mut x = Tensor::zeros(&[cells.len() * n, k]);
        let mut adjacency = Vec::with_capacity(cells.len());
        let mut agg = Vec::with_capacity(cells.len());
        let mut op_target = Vec::with_capacity(cells.len() * n);
        for (b, cell) in cells.iter().enumerate() {
            let enc = encode_cell(cell, spec)?;
            let a = Tensor::matrix(n, n, enc.adjacency.iter().map(|&v| f64::from(v)).collect())?;
            for i in 0..n {
                let label = enc.op_label(i);
                if let Some(l) = label {
                    x.set(b * n + i, l, 1.0);
                }
                op_target.push(label);
            }
            let a_tilde = augment_adjacency(&a)?;
            agg.push(match aggregation {
                Aggregation::Gin => a_tilde,
                Aggregation::Gcn => gcn_operator(&a_tilde),
            });
            adjacency.push(a);
        }
        Ok(Self { size: cells.len(), nodes: n, x, adjacency, agg, op_target })
    }
}

/// Applies each cell's `N×N` operator to its block of rows.
fn aggregate(agg: &[Tensor], h: &Tensor, n: usize) -> Tensor {
    let f = h.cols();
    let mut out = Tensor::zeros(h.shape());
    for (b, m) in agg.iter().enumerate() {
        for i in 0..n {
            let orow_start = (b * n + i) * f;
            for j in 0..n {
                let w = m.get(i, j);
                if w == 0.0 {
                    continue;
                }
                let src = h.row(b * n + j).to_vec();
                let orow = &mut out.data_mut()[orow_start..orow_start + f];
                for (o, s) in orow.iter_mut().zip(&src) {
                    *o += w * s;
                }
            }
        }
    }
    out
}

/// Scalar loss components, each averaged per cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElboTerms {
    /// negative ELBO (weighted KL included when the variant uses it)
    pub loss: f64,
    /// negative reconstruction log-likelihood (edges plus operations)
    pub recon: f64,
    /// closed-form KL to the standard normal prior (unweighted)
    pub kl: f64,
}

struct LayerCache {
    input: Tensor,
    s: Tensor,
    bn: BatchNormCache,
    q: Tensor,
}

struct Forward {
    layers: Vec<LayerCache>,
    h: Tensor,
    mu: Tensor,
    logvar: Option<Tensor>,
    sigma: Option<Tensor>,
    noise: Option<Tensor>,
    z: Tensor,
}

/// Per-node Gaussian posterior of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentPoint {
    pub node_mu: Tensor,
    pub node_sigma: Tensor,
    pub node_z: Tensor,
    pub cell_embedding: Vec<f64>,
}

/// Encoder, variational heads and decoders with their batch-norm statistics.
#[derive(Debug, Clone)]
pub struct Vgae {
    pub spec: SearchSpaceSpec,
    pub encoder: EncoderConfig,
    pub variant: Variant,
    pub params: ParamStore,
    pub bn: Vec<BatchNormState>,
}

pub(crate) fn layer_name(k: usize, what: &str) -> String {
    format!("encoder.{k}.{what}")
}

/// Standard normal draws of the given shape from a seed.
pub fn standard_normal(shape: &[usize], seed: u64) -> Tensor {
    let mut r = rng::seeded(seed);
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| r.sample::<f64, _>(StandardNormal)).collect()).expect("shape")
}

impl Vgae {
    pub fn new(
        spec: &SearchSpaceSpec,
        encoder: &EncoderConfig,
        variant: Variant,
        seed: u64,
    ) -> Result<Self, VgaeError> {
        encoder.check()?;
        spec.check()?;
        let mut r = rng::substream(seed, "vgae-init");
        let mut params = ParamStore::new();
        let mut bn = Vec::new();
        let mut fan_in = spec.num_ops();
        for (k, &width) in encoder.hidden.iter().enumerate() {
            params.insert(layer_name(k, "weight"), uniform_init(&mut r, &[fan_in, width], fan_in))?;
            params.insert(layer_name(k, "bias"), uniform_init(&mut r, &[width], fan_in))?;
            params.insert(layer_name(k, "bn.gamma"), Tensor::filled(&[width], 1.0))?;
            params.insert(layer_name(k, "bn.beta"), Tensor::zeros(&[width]))?;
            if variant.aggregation() == Aggregation::Gin && encoder.epsilon_trainable {
                params.insert(layer_name(k, "eps"), Tensor::zeros(&[1]))?;
            }
            bn.push(BatchNormState::new(width));
            fan_in = width;
        }
        let d = encoder.latent_dim();
        params.insert("head.mu.weight", uniform_init(&mut r, &[d, d], d))?;
        params.insert("head.mu.bias", uniform_init(&mut r, &[d], d))?;
        if variant.stochastic() {
            params.insert("head.logvar.weight", uniform_init(&mut r, &[d, d], d))?;
            params.insert("head.logvar.bias", uniform_init(&mut r, &[d], d))?;
        }
        let k = spec.num_ops();
        params.insert("decoder.ops.weight", uniform_init(&mut r, &[d, k], d))?;
        params.insert("decoder.ops.bias", uniform_init(&mut r, &[k], d))?;
        Ok(Self { spec: spec.clone(), encoder: encoder.clone(), variant, params, bn })
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.latent_dim()
    }

    fn epsilon(&self, params: &ParamStore, k: usize) -> f64 {
        params.get(&layer_name(k, "eps")).map(|t| t.data()[0]).unwrap_or(0.0)
    }

    fn forward(
        &self,
        params: &ParamStore,
        bn: &mut [BatchNormState],
        batch: &Batch,
        mode: Mode,
        noise_seed: Option<u64>,
    ) -> Result<Forward, VgaeError> {
        let n = batch.nodes;
        let mut h = batch.x.clone();
        let mut layers = Vec::with_capacity(self.encoder.num_layers());
        for k in 0..self.encoder.num_layers() {
            let mixed = aggregate(&batch.agg, &h, n);
            let s = match self.variant.aggregation() {
                Aggregation::Gin => h.scale(1.0 + self.epsilon(params, k)).add(&mixed)?,
                Aggregation::Gcn => mixed,
            };
            let p = linear(&s, params.value(&layer_name(k, "weight"))?, params.value(&layer_name(k, "bias"))?)?;
            let (q, cache) = batchnorm(
                &p,
                params.value(&layer_name(k, "bn.gamma"))?,
                params.value(&layer_name(k, "bn.beta"))?,
                &mut bn[k],
                mode,
            )?;
            let next = relu(&q);
            layers.push(LayerCache { input: h, s, bn: cache, q });
            h = next;
        }
        let mu = linear(&h, params.value("head.mu.weight")?, params.value("head.mu.bias")?)?;
        let (logvar, sigma, noise, z) = if self.variant.stochastic() {
            let lv = linear(&h, params.value("head.logvar.weight")?, params.value("head.logvar.bias")?)?;
            let sigma = lv.map(|v| (0.5 * v).exp());
            match noise_seed {
                Some(seed) => {
                    let eta = standard_normal(mu.shape(), seed);
                    let z = mu.add(&sigma.hadamard(&eta)?)?;
                    (Some(lv), Some(sigma), Some(eta), z)
                }
                None => {
                    let z = mu.clone();
                    (Some(lv), Some(sigma), None, z)
                }
            }
        } else {
            (None, None, None, mu.clone())
        };
        Ok(Forward { layers, h, mu, logvar, sigma, noise, z })
    }

    /// Loss terms and, when `grads` is given, gradients accumulated into it.
    fn loss_and_grad(
        &self,
        fwd: &Forward,
        params: &ParamStore,
        batch: &Batch,
        kl_weight: f64,
        grads: Option<&mut ParamStore>,
    ) -> Result<ElboTerms, VgaeError> {
        let (n, bsz) = (batch.nodes, batch.size as f64);
        let z = &fwd.z;
        let d = z.cols();
        let mut nll_a = 0.0;
        let mut dz = Tensor::zeros(z.shape());
        for (b, a) in batch.adjacency.iter().enumerate() {
            for i in 0..n {
                for j in (i + 1)..n {
                    let (zi, zj) = (z.row(b * n + i), z.row(b * n + j));
                    let s: f64 = zi.iter().zip(zj).map(|(x, y)| x * y).sum();
                    let t = a.get(i, j);
                    nll_a += s.max(0.0) + (-s.abs()).exp().ln_1p() - t * s;
                    let g = (crate::tensor::sigmoid_scalar(s) - t) / bsz;
                    if g != 0.0 {
                        let (zi, zj) = (zi.to_vec(), zj.to_vec());
                        for c in 0..d {
                            dz.data_mut()[(b * n + i) * d + c] += g * zj[c];
                            dz.data_mut()[(b * n + j) * d + c] += g * zi[c];
                        }
                    }
                }
            }
        }
        let (wo, bo) = (params.value("decoder.ops.weight")?, params.value("decoder.ops.bias")?);
        let logits = linear(z, wo, bo)?;
        let probs = row_softmax(&logits);
        let mut nll_x = 0.0;
        let mut dlogits = Tensor::zeros(logits.shape());
        for (r, target) in batch.op_target.iter().enumerate() {
            if let Some(t) = *target {
                let row = logits.row(r);
                let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
                nll_x += lse - row[t];
                let drow = dlogits.row_mut(r);
                for (c, dv) in drow.iter_mut().enumerate() {
                    *dv = (probs.get(r, c) - if c == t { 1.0 } else { 0.0 }) / bsz;
                }
            }
        }
        let kl = fwd
            .logvar
            .as_ref()
            .map(|lv| fwd.mu.data().iter().zip(lv.data()).map(|(m, l)| -0.5 * (1.0 + l - m * m - l.exp())).sum::<f64>())
            .unwrap_or(0.0);
        let beta = if self.variant.uses_kl() { kl_weight } else { 0.0 };
        let terms = ElboTerms { loss: (nll_a + nll_x + beta * kl) / bsz, recon: (nll_a + nll_x) / bsz, kl: kl / bsz };
        let Some(grads) = grads else {
            return Ok(terms);
        };

        let (dz_ops, dwo, dbo) = linear_backward(z, wo, &dlogits)?;
        grads.accumulate_grad("decoder.ops.weight", &dwo)?;
        grads.accumulate_grad("decoder.ops.bias", &dbo)?;
        dz.add_assign(&dz_ops)?;

        let mut dmu = dz.clone();
        let mut dh;
        if let (Some(lv), Some(sigma)) = (&fwd.logvar, &fwd.sigma) {
            let mut dlv = Tensor::zeros(lv.shape());
            if let Some(eta) = &fwd.noise {
                for (idx, v) in dlv.data_mut().iter_mut().enumerate() {
                    *v = 0.5 * dz.data()[idx] * eta.data()[idx] * sigma.data()[idx];
                }
            }
            if beta != 0.0 {
                for (idx, v) in dlv.data_mut().iter_mut().enumerate() {
                    *v += beta * 0.5 * (lv.data()[idx].exp() - 1.0) / bsz;
                }
                for (v, m) in dmu.data_mut().iter_mut().zip(fwd.mu.data()) {
                    *v += beta * m / bsz;
                }
            }
            let (dh_lv, dw, db) = linear_backward(&fwd.h, params.value("head.logvar.weight")?, &dlv)?;
            grads.accumulate_grad("head.logvar.weight", &dw)?;
            grads.accumulate_grad("head.logvar.bias", &db)?;
            dh = dh_lv;
        } else {
            dh = Tensor::zeros(fwd.h.shape());
        }
        let (dh_mu, dw, db) = linear_backward(&fwd.h, params.value("head.mu.weight")?, &dmu)?;
        grads.accumulate_grad("head.mu.weight", &dw)?;
        grads.accumulate_grad("head.mu.bias", &db)?;
        dh.add_assign(&dh_mu)?;

        for k in (0..self.encoder.num_layers()).rev() {
            let lc = &fwd.layers[k];
            let dq = relu_backward(&lc.q, &dh)?;
            let gamma = params.value(&layer_name(k, "bn.gamma"))?;
            let (dp, dgamma, dbeta) = batchnorm_backward(&lc.bn, gamma, &dq)?;
            grads.accumulate_grad(&layer_name(k, "bn.gamma"), &dgamma)?;
            grads.accumulate_grad(&layer_name(k, "bn.beta"), &dbeta)?;
            let w = params.value(&layer_name(k, "weight"))?;
            let (ds, dw, db) = linear_backward(&lc.s, w, &dp)?;
            grads.accumulate_grad(&layer_name(k, "weight"), &dw)?;
            grads.accumulate_grad(&layer_name(k, "bias"), &db)?;
            let eps_name = layer_name(k, "eps");
            if params.get(&eps_name).is_some() {
                let de: f64 = ds.data().iter().zip(lc.input.data()).map(|(a, b)| a * b).sum();
                grads.accumulate_grad(&eps_name, &Tensor::vector(vec![de]))?;
            }
            if k > 0 {
                let mixed = aggregate(&batch.agg, &ds, n);
                dh = match self.variant.aggregation() {
                    Aggregation::Gin => ds.scale(1.0 + self.epsilon(params, k)).add(&mixed)?,
                    Aggregation::Gcn => mixed,
                };
            }
        }
        Ok(terms)
    }

    /// Training-mode loss with the noise drawn from `seed`; gradients are
    /// accumulated into the parameter store and running statistics updated.
    pub fn elbo(&mut self, batch: &Batch, seed: u64, kl_weight: f64) -> Result<ElboTerms, VgaeError> {
        let mut bn = std::mem::take(&mut self.bn);
        let fwd = self.forward(&self.params, &mut bn, batch, Mode::Train, Some(seed));
        self.bn = bn;
        let fwd = fwd?;
        let mut params = std::mem::take(&mut self.params);
        let snapshot = params.clone();
        let out = self.loss_and_grad(&fwd, &snapshot, batch, kl_weight, Some(&mut params));
        self.params = params;
        out
    }

    /// Training-mode loss at arbitrary parameter values, leaving the model
    /// untouched (used for finite-difference checks).
    pub fn elbo_at(
        &self,
        params: &ParamStore,
        batch: &Batch,
        seed: u64,
        kl_weight: f64,
    ) -> Result<ElboTerms, VgaeError> {
        let mut bn = self.bn.clone();
        let fwd = self.forward(params, &mut bn, batch, Mode::Train, Some(seed))?;
        self.loss_and_grad(&fwd, params, batch, kl_weight, None)
    }

    /// Eval-mode posterior for a batch: `(mu, sigma)` stacked `B·N × d`.
    /// The deterministic variant reports `sigma = 0`.
    pub fn encode_batch(&self, batch: &Batch) -> Result<(Tensor, Tensor), VgaeError> {
        let mut bn = self.bn.clone();
        let fwd = self.forward(&self.params, &mut bn, batch, Mode::Eval, None)?;
        let sigma = fwd.sigma.unwrap_or_else(|| Tensor::zeros(fwd.mu.shape()));
        Ok((fwd.mu, sigma))
    }

    /// Eval-mode per-node `(mu, sigma)` of one cell, each `N×d`.
    pub fn encode(&self, cell: &CellGraph) -> Result<(Tensor, Tensor), VgaeError> {
        let batch = Batch::new(&[cell], &self.spec, self.variant.aggregation())?;
        self.encode_batch(&batch)
    }

    /// Posterior with one reparameterised sample drawn from `seed`.
    pub fn latent_point(&self, cell: &CellGraph, seed: u64) -> Result<LatentPoint, VgaeError> {
        let (mu, sigma) = self.encode(cell)?;
        let z = super::reparameterize(&mu, &sigma, seed)?;
        let cell_embedding = mu.sum_rows()?.into_data();
        Ok(LatentPoint { node_mu: mu, node_sigma: sigma, node_z: z, cell_embedding })
    }

    /// Sum over all node rows of the eval-mode posterior mean.
    pub fn cell_embedding(&self, cell: &CellGraph) -> Result<Vec<f64>, VgaeError> {
        Ok(self.encode(cell)?.0.sum_rows()?.into_data())
    }

    /// Embeddings of many cells, computed in parallel chunks; output
    /// order follows the input.
    pub fn embed_all(&self, cells: &[CellGraph]) -> Result<Vec<Vec<f64>>, VgaeError> {
        let n = self.spec.max_nodes;
        let chunks: Vec<Result<Vec<Vec<f64>>, VgaeError>> = cells
            .par_chunks(256)
            .map(|chunk| {
                let refs: Vec<&CellGraph> = chunk.iter().collect();
                let batch = Batch::new(&refs, &self.spec, self.variant.aggregation())?;
                let (mu, _) = self.encode_batch(&batch)?;
                Ok((0..chunk.len())
                    .map(|b| {
                        let mut e = vec![0.0; mu.cols()];
                        for i in 0..n {
                            for (acc, v) in e.iter_mut().zip(mu.row(b * n + i)) {
                                *acc += v;
                            }
                        }
                        e
                    })
                    .collect())
            })
            .collect();
        let mut out = Vec::with_capacity(cells.len());
        for c in chunks {
            out.extend(c?);
        }
        Ok(out)
    }
}

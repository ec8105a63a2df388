use std::collections::BTreeMap;

use rand::seq::index::sample;
use sha2::{Digest, Sha256};

use super::{mismatch, Tensor, TensorError};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone)]
struct Slot {
    value: Tensor,
    grad: Tensor,
    m: Tensor,
    v: Tensor,
    has_grad: bool,
}

/// Named parameters with gradient and Adam moment slots.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    slots: BTreeMap<String, Slot>,
    step: u64,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) -> Result<(), TensorError> {
        let name = name.into();
        if self.slots.contains_key(&name) {
            return Err(TensorError::DuplicateParam(name));
        }
        let z = Tensor::zeros(value.shape());
        self.slots.insert(name, Slot { grad: z.clone(), m: z.clone(), v: z, value, has_grad: false });
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.slots.get(name).map(|s| &s.value)
    }

    pub fn value(&self, name: &str) -> Result<&Tensor, TensorError> {
        self.get(name).ok_or_else(|| TensorError::UnknownParam(name.to_string()))
    }

    pub fn value_mut(&mut self, name: &str) -> Result<&mut Tensor, TensorError> {
        self.slots.get_mut(name).map(|s| &mut s.value).ok_or_else(|| TensorError::UnknownParam(name.to_string()))
    }

    pub fn grad(&self, name: &str) -> Result<&Tensor, TensorError> {
        self.slots.get(name).map(|s| &s.grad).ok_or_else(|| TensorError::UnknownParam(name.to_string()))
    }

    /// Adds `g` into the gradient slot of `name`.
    pub fn accumulate_grad(&mut self, name: &str, g: &Tensor) -> Result<(), TensorError> {
        let slot = self.slots.get_mut(name).ok_or_else(|| TensorError::UnknownParam(name.to_string()))?;
        if slot.grad.len() != g.len() {
            return Err(mismatch(format!("gradient for {name}: {:?} vs {:?}", g.shape(), slot.grad.shape())));
        }
        for (a, b) in slot.grad.data_mut().iter_mut().zip(g.data()) {
            *a += b;
        }
        slot.has_grad = true;
        Ok(())
    }

    pub fn zero_grad(&mut self) {
        for s in self.slots.values_mut() {
            s.grad.data_mut().fill(0.0);
            s.has_grad = false;
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.slots.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.slots.iter().map(|(k, s)| (k.as_str(), &s.value))
    }

    pub fn num_scalars(&self) -> usize {
        self.slots.values().map(|s| s.value.len()).sum()
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn adam_update(&mut self, lr: f64) -> Result<(), TensorError> {
        self.adam_update_with(&AdamConfig::with_lr(lr))
    }

    /// Bias-corrected Adam step over every parameter; gradients are zeroed
    /// afterwards. Every parameter must have received a gradient.
    pub fn adam_update_with(&mut self, cfg: &AdamConfig) -> Result<(), TensorError> {
        if let Some((name, _)) = self.slots.iter().find(|(_, s)| !s.has_grad) {
            return Err(TensorError::MissingGradient(name.clone()));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        for s in self.slots.values_mut() {
            let g = s.grad.data();
            let (m, v, w) = (s.m.data_mut(), s.v.data_mut(), s.value.data_mut());
            for k in 0..g.len() {
                m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
                v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
                let mhat = m[k] / c1;
                let vhat = v[k] / c2;
                w[k] -= cfg.lr * mhat / (vhat.sqrt() + cfg.eps);
            }
        }
        self.zero_grad();
        Ok(())
    }

    /// SHA-256 over parameter names, shapes and little-endian values.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (name, t) in self.iter() {
            h.update((name.len() as u64).to_le_bytes());
            h.update(name.as_bytes());
            for d in t.shape() {
                h.update((*d as u64).to_le_bytes());
            }
            for v in t.data() {
                h.update(v.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

/// Central-difference gradient checker over randomly chosen coordinates.
#[derive(Debug, Clone, Copy)]
pub struct FiniteDiff {
    pub eps: f64,
    pub samples: usize,
    /// lower bound on the denominator of the relative error
    pub floor: f64,
    pub seed: u64,
}

impl Default for FiniteDiff {
    fn default() -> Self {
        Self { eps: 1e-5, samples: 200, floor: 1e-8, seed: 0 }
    }
}

impl FiniteDiff {
    /// Compares the gradients currently held in `store` against central
    /// differences of `loss`; returns the maximum relative error.
    pub fn run(&self, store: &mut ParamStore, mut loss: impl FnMut(&ParamStore) -> f64) -> f64 {
        let coords: Vec<(String, usize)> =
            store.slots.iter().flat_map(|(k, s)| (0..s.value.len()).map(move |i| (k.clone(), i))).collect();
        let n = self.samples.min(coords.len());
        let mut r = rng::seeded(self.seed);
        let mut worst: f64 = 0.0;
        for idx in sample(&mut r, coords.len(), n) {
            let (name, i) = &coords[idx];
            let analytic = store.slots[name].grad.data()[*i];
            let orig = store.slots[name].value.data()[*i];
            store.slots.get_mut(name).unwrap().value.data_mut()[*i] = orig + self.eps;
            let lp = loss(store);
            store.slots.get_mut(name).unwrap().value.data_mut()[*i] = orig - self.eps;
            let lm = loss(store);
            store.slots.get_mut(name).unwrap().value.data_mut()[*i] = orig;
            let numeric = (lp - lm) / (2.0 * self.eps);
            let denom = analytic.abs().max(numeric.abs()).max(self.floor);
            worst = worst.max((analytic - numeric).abs() / denom);
        }
        worst
    }
}

pub fn finite_diff_check(
    loss: impl FnMut(&ParamStore) -> f64,
    store: &mut ParamStore,
    eps: f64,
    samples: usize,
    seed: u64,
) -> f64 {
    FiniteDiff { eps, samples, seed, ..FiniteDiff::default() }.run(store, loss)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_store(w: f64) -> ParamStore {
        let mut s = ParamStore::new();
        s.insert("w", Tensor::vector(vec![w])).unwrap();
        s
    }

    #[test]
    fn first_step_closed_form() {
        for g in [3.0, -0.02, 1e-3] {
            let mut s = scalar_store(1.0);
            s.accumulate_grad("w", &Tensor::vector(vec![g])).unwrap();
            s.adam_update(0.1).unwrap();
            let delta = s.value("w").unwrap().data()[0] - 1.0;
            let expected = -0.1 * g / (g.abs() + 1e-8);
            assert!((delta - expected).abs() < 1e-15);
            assert!((delta + 0.1 * g.signum()).abs() < 1e-6);
            assert_eq!(s.grad("w").unwrap().data()[0], 0.0);
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut s = scalar_store(0.7);
        s.accumulate_grad("w", &Tensor::vector(vec![0.0])).unwrap();
        s.adam_update(0.1).unwrap();
        assert_eq!(s.value("w").unwrap().data()[0], 0.7);
    }

    #[test]
    fn missing_gradient_and_duplicates() {
        let mut s = scalar_store(1.0);
        assert_eq!(s.adam_update(0.1), Err(TensorError::MissingGradient("w".into())));
        assert_eq!(s.step(), 0);
        assert!(s.insert("w", Tensor::zeros(&[1])).is_err());
        assert!(s.accumulate_grad("nope", &Tensor::zeros(&[1])).is_err());
    }

    #[test]
    fn quadratic_converges() {
        let mut s = scalar_store(1.0);
        for _ in 0..100 {
            let w = s.value("w").unwrap().data()[0];
            s.accumulate_grad("w", &Tensor::vector(vec![2.0 * w])).unwrap();
            s.adam_update(0.1).unwrap();
        }
        assert!(s.value("w").unwrap().data()[0].abs() < 0.1);
        assert_eq!(s.step(), 100);
    }

    #[test]
    fn finite_difference_on_quadratic() {
        let mut s = ParamStore::new();
        s.insert("a", Tensor::vector(vec![0.5, -1.0, 2.0])).unwrap();
        s.insert("unused", Tensor::vector(vec![3.0])).unwrap();
        let loss = |p: &ParamStore| p.value("a").unwrap().data().iter().map(|v| v * v).sum::<f64>();
        let g = s.value("a").unwrap().scale(2.0);
        s.accumulate_grad("a", &g).unwrap();
        assert!(finite_diff_check(loss, &mut s, 1e-5, 10, 0) < 1e-8);
        assert_eq!(s.grad("unused").unwrap().data()[0], 0.0);
    }

    #[test]
    fn digest_tracks_values() {
        let a = scalar_store(1.0);
        let b = scalar_store(1.0);
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), scalar_store(1.0 + 1e-12).digest());
    }
}

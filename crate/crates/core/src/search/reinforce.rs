use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::trace::Run;
use super::{Budget, SearchError, SearchSpace, SearchTrace, TerminalReason};
use crate::rng;
use crate::tensor::{
    linear, linear_backward, lstm_step, lstm_step_backward, uniform_init, LstmCache, LstmParams, ParamStore, Tensor,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum BaselineMode {
    /// constant `b` subtracted from every return
    Fixed,
    /// `b ← decay·b + (1 − decay)·mean(G)` after each episode, starting from `baseline`
    Ema { decay: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpisodeMode {
    /// discounted returns over the episode's trajectory
    Sequential,
    /// each draw scored by its own reward
    Bandit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReinforceHyper {
    pub lstm_hidden: usize,
    pub lr: f64,
    pub archs_per_episode: usize,
    pub gamma: f64,
    pub baseline: f64,
    pub baseline_mode: BaselineMode,
    pub episode_mode: EpisodeMode,
}

impl Default for ReinforceHyper {
    fn default() -> Self {
        Self {
            lstm_hidden: 128,
            lr: 1e-2,
            archs_per_episode: 16,
            gamma: 0.8,
            baseline: 0.95,
            baseline_mode: BaselineMode::Fixed,
            episode_mode: EpisodeMode::Sequential,
        }
    }
}

impl ReinforceHyper {
    pub fn check(&self) -> Result<(), SearchError> {
        let bad = |m: &str| Err(SearchError::Config(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if self.archs_per_episode == 0 || self.lstm_hidden == 0 {
            return bad("archs_per_episode and lstm_hidden must be positive");
        }
        if !(self.lr > 0.0) || !self.baseline.is_finite() {
            return bad("lr must be positive and baseline finite");
        }
        if let BaselineMode::Ema { decay } = self.baseline_mode {
            if !(0.0..1.0).contains(&decay) {
                return bad("ema decay must lie in [0, 1)");
            }
        }
        Ok(())
    }

    /// Returns `G_t` for a reward sequence.
    pub fn returns(&self, rewards: &[f64]) -> Vec<f64> {
        match self.episode_mode {
            EpisodeMode::Bandit => rewards.to_vec(),
            EpisodeMode::Sequential => {
                let mut g = vec![0.0; rewards.len()];
                let mut acc = 0.0;
                for t in (0..rewards.len()).rev() {
                    acc = rewards[t] + self.gamma * acc;
                    g[t] = acc;
                }
                g
            }
        }
    }
}

pub(crate) struct Step {
    cache: LstmCache,
    h: Tensor,
    mean: Tensor,
    action: Tensor,
}

/// LSTM policy emitting the mean of a unit-covariance Gaussian action.
pub(crate) struct Controller {
    pub params: ParamStore,
    dim: usize,
    hidden: usize,
}

impl Controller {
    pub fn new(dim: usize, hidden: usize, seed: u64) -> Self {
        let mut r = rng::substream(seed, "reinforce-init");
        let mut params = ParamStore::new();
        let ins = |p: &mut ParamStore, n: &str, t| p.insert(n, t).expect("fresh name");
        ins(&mut params, "lstm.w_ih", uniform_init(&mut r, &[dim, 4 * hidden], hidden));
        ins(&mut params, "lstm.w_hh", uniform_init(&mut r, &[hidden, 4 * hidden], hidden));
        ins(&mut params, "lstm.b", uniform_init(&mut r, &[4 * hidden], hidden));
        ins(&mut params, "head.weight", uniform_init(&mut r, &[hidden, dim], hidden));
        ins(&mut params, "head.bias", uniform_init(&mut r, &[dim], hidden));
        Self { params, dim, hidden }
    }

    fn lstm(params: &ParamStore) -> LstmParams<'_> {
        LstmParams {
            w_ih: params.get("lstm.w_ih").unwrap(),
            w_hh: params.get("lstm.w_hh").unwrap(),
            b: params.get("lstm.b").unwrap(),
        }
    }

    pub fn initial_state(&self) -> (Tensor, Tensor, Tensor) {
        (Tensor::zeros(&[1, self.dim]), Tensor::zeros(&[1, self.hidden]), Tensor::zeros(&[1, self.hidden]))
    }

    /// Advances the recurrent state on input `x` and returns the step with
    /// its mean; `noise` (unit normal) is added to form the action.
    pub fn step(
        &self,
        x: &Tensor,
        h: &Tensor,
        c: &Tensor,
        noise: &[f64],
    ) -> Result<(Tensor, Tensor, Step), SearchError> {
        Self::step_with(&self.params, x, h, c, noise)
    }

    fn step_with(
        p: &ParamStore,
        x: &Tensor,
        h: &Tensor,
        c: &Tensor,
        noise: &[f64],
    ) -> Result<(Tensor, Tensor, Step), SearchError> {
        let (h1, c1, cache) = lstm_step(x, h, c, Self::lstm(p))?;
        let mean = linear(&h1, p.get("head.weight").unwrap(), p.get("head.bias").unwrap())?;
        let action = Tensor::matrix(1, noise.len(), mean.data().iter().zip(noise).map(|(m, e)| m + e).collect())?;
        Ok((h1.clone(), c1, Step { cache, h: h1, mean, action }))
    }

    /// Surrogate loss `(1/T)·Σ adv_t·½‖a_t − mean_t‖²` for fixed inputs and actions.
    #[cfg(test)]
    fn surrogate(p: &ParamStore, inputs: &[Tensor], actions: &[Tensor], adv: &[f64]) -> f64 {
        let hidden = p.get("lstm.w_hh").unwrap().rows();
        let (mut h, mut c) = (Tensor::zeros(&[1, hidden]), Tensor::zeros(&[1, hidden]));
        let mut total = 0.0;
        for ((x, a), w) in inputs.iter().zip(actions).zip(adv) {
            let zero = vec![0.0; a.len()];
            let (h1, c1, s) = Self::step_with(p, x, &h, &c, &zero).unwrap();
            total += w * 0.5 * a.sub(&s.mean).unwrap().data().iter().map(|v| v * v).sum::<f64>();
            h = h1;
            c = c1;
        }
        total / adv.len() as f64
    }

    /// Accumulates the score-function gradient of `−(1/T)·Σ adv_t·log π(a_t)`
    /// by backpropagation through time.
    pub fn accumulate(&mut self, steps: &[Step], adv: &[f64]) -> Result<(), SearchError> {
        let t_len = steps.len() as f64;
        let mut gh_next = Tensor::zeros(&[1, self.hidden]);
        let mut gc_next = Tensor::zeros(&[1, self.hidden]);
        let mut grads: Vec<(&str, Tensor)> = Vec::new();
        for (s, &a) in steps.iter().zip(adv).rev() {
            let gmean = s.mean.sub(&s.action)?.scale(a / t_len);
            let (gh, gw, gb) = linear_backward(&s.h, self.params.get("head.weight").unwrap(), &gmean)?;
            let gh = gh.add(&gh_next)?;
            let g = lstm_step_backward(&s.cache, Self::lstm(&self.params), &gh, &gc_next)?;
            grads.push(("head.weight", gw));
            grads.push(("head.bias", gb));
            grads.push(("lstm.w_ih", g.w_ih));
            grads.push(("lstm.w_hh", g.w_hh));
            grads.push(("lstm.b", g.b));
            gh_next = g.h;
            gc_next = g.c;
        }
        for (name, g) in grads {
            self.params.accumulate_grad(name, &g)?;
        }
        Ok(())
    }
}

/// Policy-gradient search: an LSTM controller proposes points in embedding
/// space, each resolved to the nearest unvisited architecture.
pub fn reinforce_search(
    space: SearchSpace<'_>,
    budget: &Budget,
    hyper: &ReinforceHyper,
    seed: u64,
) -> Result<SearchTrace, SearchError> {
    hyper.check()?;
    let mut run = Run::new(space, budget)?;
    let dim = space.index.dim();
    let mut ctrl = Controller::new(dim, hyper.lstm_hidden, seed);
    let mut noise_rng = rng::substream(seed, "reinforce-noise");
    let mut baseline = hyper.baseline;
    while !run.done() {
        let (mut x, mut h, mut c) = ctrl.initial_state();
        let mut steps = Vec::with_capacity(hyper.archs_per_episode);
        let mut rewards = Vec::with_capacity(hyper.archs_per_episode);
        for _ in 0..hyper.archs_per_episode {
            let noise: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut noise_rng)).collect();
            let (h1, c1, step) = ctrl.step(&x, &h, &c, &noise)?;
            let row = match space.index.nearest_row(step.action.data(), &run.visited) {
                Ok(r) => r,
                Err(SearchError::AllExcluded) => {
                    run.terminal = Some(TerminalReason::Exhausted);
                    break;
                }
                Err(e) => return Err(e),
            };
            let Some(r) = run.query(row)? else { break };
            x = Tensor::matrix(1, dim, space.index.row(row).to_vec())?;
            h = h1;
            c = c1;
            steps.push(step);
            rewards.push(r);
            if run.done() {
                break;
            }
        }
        if steps.len() < hyper.archs_per_episode {
            break;
        }
        let returns = hyper.returns(&rewards);
        let adv: Vec<f64> = returns.iter().map(|g| g - baseline).collect();
        ctrl.params.zero_grad();
        ctrl.accumulate(&steps, &adv)?;
        ctrl.params.adam_update(hyper.lr)?;
        if let BaselineMode::Ema { decay } = hyper.baseline_mode {
            let m = returns.iter().sum::<f64>() / returns.len() as f64;
            baseline = decay * baseline + (1.0 - decay) * m;
        }
    }
    Ok(run.finish())
}

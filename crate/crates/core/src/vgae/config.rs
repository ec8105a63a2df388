use serde::{Deserialize, Serialize};

use super::VgaeError;

/// Neighbour aggregation rule of the encoder layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// `(1+ε)·H + Ã·H` with a trainable ε per layer
    Gin,
    /// `D^{-1/2}(Ã+I)D^{-1/2}·H`
    Gcn,
}

/// Model family used for pre-training and the ablation table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// GIN encoder, sampled latent, KL regulariser
    GinVariational,
    /// GIN encoder, sampled latent, no KL term
    GinNoKl,
    /// GCN encoder, sampled latent, KL regulariser
    GcnVariational,
    /// GCN encoder, deterministic latent, no KL term
    GcnDeterministic,
}

impl Variant {
    pub const ALL: [Variant; 4] =
        [Variant::GinVariational, Variant::GinNoKl, Variant::GcnVariational, Variant::GcnDeterministic];

    pub fn aggregation(self) -> Aggregation {
        match self {
            Variant::GinVariational | Variant::GinNoKl => Aggregation::Gin,
            Variant::GcnVariational | Variant::GcnDeterministic => Aggregation::Gcn,
        }
    }

    pub fn stochastic(self) -> bool {
        self != Variant::GcnDeterministic
    }

    pub fn uses_kl(self) -> bool {
        matches!(self, Variant::GinVariational | Variant::GcnVariational)
    }

    pub fn label(self) -> &'static str {
        match self {
            Variant::GinVariational => "gin-variational",
            Variant::GinNoKl => "gin-no-kl",
            Variant::GcnVariational => "vgae",
            Variant::GcnDeterministic => "gae",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub hidden: Vec<usize>,
    pub epsilon_trainable: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self { hidden: vec![128, 128, 128, 128, 16], epsilon_trainable: true }
    }
}

impl EncoderConfig {
    pub fn num_layers(&self) -> usize {
        self.hidden.len()
    }

    /// Latent width, equal to the last hidden size.
    pub fn latent_dim(&self) -> usize {
        self.hidden.last().copied().unwrap_or(0)
    }

    pub fn check(&self) -> Result<(), VgaeError> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(VgaeError::Config(format!("hidden sizes {:?} must be nonempty and positive", self.hidden)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainHyper {
    pub lr: f64,
    pub batch_size: usize,
    /// maximum number of epochs
    pub epochs: usize,
    /// stop once held-out reconstruction has not improved for this many epochs
    pub patience: Option<usize>,
    pub seed: u64,
    /// weight on the KL term for variants that use it
    pub kl_weight: f64,
    pub heldout_fraction: f64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        Self { lr: 1e-3, batch_size: 32, epochs: 10, patience: None, seed: 0, kl_weight: 1.0, heldout_fraction: 0.1 }
    }
}

impl TrainHyper {
    pub fn check(&self) -> Result<(), VgaeError> {
        if !(self.lr > 0.0) || self.batch_size == 0 || !(0.0..1.0).contains(&self.heldout_fraction) {
            return Err(VgaeError::Config(format!("bad training hyperparameters {self:?}")));
        }
        Ok(())
    }
}

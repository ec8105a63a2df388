use std::path::{Path, PathBuf};

use latentnas::archspace::SearchSpaceSpec;
use latentnas::search::{DngoHyper, ReinforceHyper};
use latentnas::vgae::{EncoderConfig, TrainHyper, Variant};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub space: SpaceSource,
    /// architecture dataset; the space is enumerated when absent
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    #[serde(default)]
    pub oracle: OracleSource,
    #[serde(default)]
    pub artifacts: Artifacts,
    #[serde(default)]
    pub pretrain: PretrainSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub analyze: AnalyzeSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum SpaceSource {
    Builtin(String),
    Path(PathBuf),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "kebab-case")]
pub enum OracleSource {
    #[default]
    Synthetic,
    Tabular {
        path: PathBuf,
    },
}

/// Inputs produced by earlier stages; default to files in the output directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Artifacts {
    pub checkpoint: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PretrainSection {
    pub variant: Variant,
    pub encoder: EncoderConfig,
    pub train: TrainHyper,
}

impl Default for PretrainSection {
    fn default() -> Self {
        Self { variant: Variant::GinVariational, encoder: EncoderConfig::default(), train: TrainHyper::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub n_prior: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { n_prior: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Reinforce,
    Dngo,
    Random,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Reinforce => "reinforce",
            Method::Dngo => "dngo",
            Method::Random => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    pub methods: Vec<Method>,
    pub runs: usize,
    pub budget_seconds: Option<f64>,
    pub budget_queries: Option<usize>,
    pub reinforce: ReinforceHyper,
    pub dngo: DngoHyper,
}

impl Default for SearchSection {
    fn default() -> Self {
        Self {
            methods: vec![Method::Reinforce, Method::Dngo, Method::Random],
            runs: 1,
            budget_seconds: None,
            budget_queries: Some(100),
            reinforce: ReinforceHyper::default(),
            dngo: DngoHyper::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeSection {
    pub walk_len: usize,
    pub window: usize,
    pub gp_n_train: usize,
    pub gp_floor: f64,
    pub gp_seeds: usize,
    pub chain_length: usize,
    pub chain_runs: usize,
    pub n_prior: usize,
}

impl Default for AnalyzeSection {
    fn default() -> Self {
        Self {
            walk_len: 1000,
            window: 10,
            gp_n_train: 250,
            gp_floor: 0.8,
            gp_seeds: 10,
            chain_length: 16,
            chain_runs: 20,
            n_prior: 10_000,
        }
    }
}

/// A parsed config with paths resolved against the config file's directory.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub spec: SearchSpaceSpec,
    pub digest: String,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut config: RunConfig = toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(s) = seed_override {
        config.seed = s;
    }
    config.pretrain.train.seed = config.seed;
    let base = path.parent().unwrap_or(Path::new("."));
    if let Some(p) = config.dataset.as_mut() {
        resolve(base, p);
    }
    if let OracleSource::Tabular { path } = &mut config.oracle {
        resolve(base, path);
    }
    for p in [config.artifacts.checkpoint.as_mut(), config.artifacts.embeddings.as_mut()].into_iter().flatten() {
        resolve(base, p);
    }
    let spec = match &mut config.space {
        SpaceSource::Builtin(name) => SearchSpaceSpec::builtin(name)
            .ok_or_else(|| CliError::Config(format!("unknown built-in space {name:?}")))?,
        SpaceSource::Path(p) => {
            resolve(base, p);
            let t = std::fs::read_to_string(&*p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            SearchSpaceSpec::from_toml(&t).map_err(|e| CliError::Config(e.to_string()))?
        }
    };
    let referenced = config.dataset.iter().chain(match &config.oracle {
        OracleSource::Tabular { path } => Some(path),
        OracleSource::Synthetic => None,
    });
    for p in referenced {
        if !p.exists() {
            return Err(CliError::Config(format!("{} does not exist", p.display())));
        }
    }
    check(&config)?;
    let canonical = serde_json::to_vec(&config).expect("config serialises");
    let digest = hex::encode(Sha256::digest(&canonical));
    Ok(Loaded { config, spec, digest })
}

fn check(c: &RunConfig) -> Result<(), CliError> {
    let cfg = |e: &dyn std::fmt::Display| CliError::Config(e.to_string());
    c.pretrain.encoder.check().map_err(|e| cfg(&e))?;
    c.pretrain.train.check().map_err(|e| cfg(&e))?;
    c.search.reinforce.check().map_err(|e| cfg(&e))?;
    c.search.dngo.check().map_err(|e| cfg(&e))?;
    if c.search.runs == 0 || c.search.methods.is_empty() {
        return Err(CliError::Config("search needs at least one method and one run".into()));
    }
    if c.search.budget_seconds.is_none() && c.search.budget_queries.is_none() {
        return Err(CliError::Config("search needs budget_seconds or budget_queries".into()));
    }
    if c.eval.n_prior == 0 || c.analyze.n_prior == 0 || c.analyze.gp_seeds == 0 || c.analyze.chain_length == 0 {
        return Err(CliError::Config("sample counts must be positive".into()));
    }
    Ok(())
}

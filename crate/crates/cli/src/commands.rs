use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use latentnas::archspace::{enumerate, CellGraph};
use latentnas::formats::{parse_dataset, parse_embeddings, write_csv, write_embeddings, write_history, write_trace};
use latentnas::metrics::{
    l2_edit_profile, mean_std, median, neighbor_sequence, predictive_fit, pretrain_report, random_chain, EditProfile,
    PredictiveFit, PretrainReport,
};
use latentnas::oracle::{AccuracyOracle, SyntheticOracle, TabularOracle};
use latentnas::rng;
use latentnas::search::{
    build_index, dngo_search, random_search, reinforce_search, Budget, EmbeddingTable, SearchSpace, SearchTrace,
};
use latentnas::tensor::{parse_checkpoint, write_checkpoint};
use latentnas::vgae::{split_dataset, train, Vgae};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Loaded, Method, OracleSource};
use crate::{runtime, CliError, Command};

pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const EMBEDDINGS_FILE: &str = "embeddings.ndjson";

struct Ctx<'a> {
    loaded: Loaded,
    out: &'a Path,
    outputs: Vec<String>,
}

impl Ctx<'_> {
    fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
        let path = self.out.join(name);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(runtime)?;
        }
        std::fs::write(&path, bytes).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value).map_err(runtime)?;
        s.push('\n');
        self.write(name, s)
    }

    fn digest(&self) -> &str {
        &self.loaded.digest
    }

    fn seed(&self) -> u64 {
        self.loaded.config.seed
    }

    fn artifact(&self, configured: &Option<PathBuf>, default: &str) -> Result<PathBuf, CliError> {
        let p = configured.clone().unwrap_or_else(|| self.out.join(default));
        if !p.exists() {
            return Err(CliError::Config(format!("{} does not exist", p.display())));
        }
        Ok(p)
    }

    fn dataset(&self) -> Result<Vec<(u64, CellGraph)>, CliError> {
        let spec = &self.loaded.spec;
        match &self.loaded.config.dataset {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                parse_dataset(&text, spec).map_err(runtime)
            }
            None => Ok(enumerate(spec)
                .map_err(|e| CliError::Config(format!("no dataset configured and {e}")))?
                .enumerate()
                .map(|(i, c)| (i as u64, c))
                .collect()),
        }
    }

    fn oracle(&self) -> Result<Box<dyn AccuracyOracle>, CliError> {
        Ok(match &self.loaded.config.oracle {
            OracleSource::Synthetic => Box::new(SyntheticOracle::new(&self.loaded.spec)),
            OracleSource::Tabular { path } => Box::new(TabularOracle::load(&self.loaded.spec, path).map_err(runtime)?),
        })
    }

    fn model(&self) -> Result<Vgae, CliError> {
        let p = self.artifact(&self.loaded.config.artifacts.checkpoint, CHECKPOINT_FILE)?;
        let bytes = std::fs::read(&p).map_err(runtime)?;
        let ck = parse_checkpoint(&bytes).map_err(runtime)?;
        let model = Vgae::from_checkpoint(&ck).map_err(runtime)?;
        if model.spec != self.loaded.spec {
            return Err(CliError::Config(format!(
                "checkpoint space {:?} differs from the configured space",
                model.spec.name
            )));
        }
        Ok(model)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_digest: &'a str,
    seed: u64,
    started_unix: u64,
    finished_unix: u64,
    outputs: &'a [String],
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn run(command: Command, loaded: Loaded, out: &Path) -> Result<(), CliError> {
    let started_unix = now();
    std::fs::create_dir_all(out).map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
    let mut ctx = Ctx { loaded, out, outputs: Vec::new() };
    let name = match command {
        Command::Pretrain => pretrain(&mut ctx).map(|_| "pretrain"),
        Command::Embed => embed(&mut ctx).map(|_| "embed"),
        Command::EvalPretrain => eval_pretrain(&mut ctx).map(|_| "eval-pretrain"),
        Command::Search => search(&mut ctx).map(|_| "search"),
        Command::Analyze => analyze(&mut ctx).map(|_| "analyze"),
        Command::Report => report(&mut ctx).map(|_| "report"),
    }?;
    let outputs = std::mem::take(&mut ctx.outputs);
    let manifest = Manifest {
        command: name,
        config_digest: ctx.digest(),
        seed: ctx.seed(),
        started_unix,
        finished_unix: now(),
        outputs: &outputs,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(runtime)? + "\n";
    std::fs::write(out.join(format!("manifest.{name}.json")), text).map_err(runtime)
}

fn pretrain(ctx: &mut Ctx) -> Result<(), CliError> {
    let data: Vec<CellGraph> = ctx.dataset()?.into_iter().map(|(_, c)| c).collect();
    let p = &ctx.loaded.config.pretrain;
    let outcome = train(&data, &ctx.loaded.spec, &p.encoder, p.variant, &p.train).map_err(runtime)?;
    let meta = BTreeMap::from([("config_digest".to_string(), ctx.digest().to_string())]);
    let bytes = write_checkpoint(&outcome.model.to_checkpoint(&meta));
    ctx.write(CHECKPOINT_FILE, bytes)?;
    ctx.write("history.ndjson", write_history(&outcome.history))
}

fn embed(ctx: &mut Ctx) -> Result<(), CliError> {
    let model = ctx.model()?;
    let (ids, cells): (Vec<u64>, Vec<CellGraph>) = ctx.dataset()?.into_iter().unzip();
    let emb = model.embed_all(&cells).map_err(runtime)?;
    let table = EmbeddingTable::new(ids, emb).map_err(runtime)?;
    ctx.write(EMBEDDINGS_FILE, write_embeddings(&table))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PretrainOutput {
    pub config_digest: String,
    pub report: PretrainReport,
}

fn split_report(ctx: &Ctx, model: &Vgae, cells: &[CellGraph], n_prior: usize) -> Result<PretrainReport, CliError> {
    let frac = ctx.loaded.config.pretrain.train.heldout_fraction;
    let (tr, ho) = split_dataset(cells.len(), frac, ctx.seed());
    let tr: Vec<&CellGraph> = tr.iter().map(|&i| &cells[i]).collect();
    let ho: Vec<&CellGraph> = if ho.is_empty() { tr.clone() } else { ho.iter().map(|&i| &cells[i]).collect() };
    pretrain_report(model, &tr, &ho, n_prior, ctx.seed()).map_err(runtime)
}

fn eval_pretrain(ctx: &mut Ctx) -> Result<(), CliError> {
    let model = ctx.model()?;
    let cells: Vec<CellGraph> = ctx.dataset()?.into_iter().map(|(_, c)| c).collect();
    let report = split_report(ctx, &model, &cells, ctx.loaded.config.eval.n_prior)?;
    let out = PretrainOutput { config_digest: ctx.digest().to_string(), report };
    ctx.write_json("pretrain_report.json", &out)
}

/// Final-incumbent statistics of one method over its runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub runs: usize,
    pub final_test_mean: f64,
    pub final_test_std: f64,
    pub final_regret_mean: f64,
    pub final_regret_std: f64,
    pub final_validation_mean: f64,
    /// runs that queried the best-validation architecture
    pub optimum_found: usize,
    pub median_queries_to_optimum: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchAggregate {
    pub config_digest: String,
    pub best_validation: f64,
    pub best_test: f64,
    pub methods: Vec<MethodSummary>,
}

pub fn trace_name(method: Method, run: usize) -> String {
    format!("traces/{}-{run:03}.ndjson", method.label())
}

fn search(ctx: &mut Ctx) -> Result<(), CliError> {
    let p = ctx.artifact(&ctx.loaded.config.artifacts.embeddings, EMBEDDINGS_FILE)?;
    let table = parse_embeddings(&std::fs::read_to_string(&p).map_err(runtime)?).map_err(runtime)?;
    let by_id: BTreeMap<u64, CellGraph> = ctx.dataset()?.into_iter().collect();
    let cells: Vec<CellGraph> = table
        .ids
        .iter()
        .map(|id| {
            by_id.get(id).cloned().ok_or_else(|| CliError::Runtime(format!("embedding id {id} is not in the dataset")))
        })
        .collect::<Result<_, _>>()?;
    let oracle = ctx.oracle()?;
    let index = build_index(&table).map_err(runtime)?;
    let space = SearchSpace::new(&index, &cells, oracle.as_ref()).map_err(runtime)?;
    let records: Vec<_> = cells.iter().map(|c| oracle.lookup(c)).collect::<Result<_, _>>().map_err(runtime)?;
    let best =
        records.iter().max_by(|a, b| a.validation_accuracy.total_cmp(&b.validation_accuracy)).expect("nonempty table");
    let best_row = records.iter().position(|r| r == best).expect("present");
    let best_test = records.iter().map(|r| r.test_accuracy).fold(f64::MIN, f64::max);

    let s = &ctx.loaded.config.search.clone();
    let budget = Budget { seconds: s.budget_seconds.unwrap_or(f64::INFINITY), queries: s.budget_queries, target: None };
    let jobs: Vec<(Method, usize)> = s.methods.iter().flat_map(|&m| (0..s.runs).map(move |r| (m, r))).collect();
    let seed = ctx.seed();
    let results: Vec<(Method, usize, Result<SearchTrace, String>)> = jobs
        .par_iter()
        .map(|&(m, r)| {
            let run_seed = seed + r as u64;
            let t = match m {
                Method::Reinforce => reinforce_search(space, &budget, &s.reinforce, run_seed),
                Method::Dngo => dngo_search(space, &budget, &s.dngo, run_seed),
                Method::Random => random_search(space, &budget, run_seed),
            };
            (m, r, t.map_err(|e| e.to_string()))
        })
        .collect();

    let mut failures = Vec::new();
    let mut by_method: BTreeMap<usize, Vec<SearchTrace>> = BTreeMap::new();
    for (m, r, t) in results {
        match t {
            Ok(t) => {
                ctx.write(&trace_name(m, r), write_trace(&t.events))?;
                let slot = s.methods.iter().position(|x| *x == m).unwrap();
                by_method.entry(slot).or_default().push(t);
            }
            Err(e) => failures.push(format!("{} run {r}: {e}", m.label())),
        }
    }
    if !failures.is_empty() {
        return Err(CliError::Runtime(failures.join("; ")));
    }
    let best_id = index.id(best_row);
    let methods = by_method
        .into_iter()
        .map(|(slot, traces)| summarize(s.methods[slot], &traces, best_id, best_test))
        .collect::<Vec<_>>();
    let agg = SearchAggregate {
        config_digest: ctx.digest().to_string(),
        best_validation: best.validation_accuracy,
        best_test,
        methods,
    };
    ctx.write("aggregate.csv", write_csv(agg.methods.iter()).map_err(runtime)?)?;
    ctx.write_json("aggregate.json", &agg)
}

pub fn summarize(method: Method, traces: &[SearchTrace], best_id: u64, best_test: f64) -> MethodSummary {
    let finals: Vec<_> = traces.iter().filter_map(|t| t.final_incumbent()).collect();
    let test: Vec<f64> = finals.iter().map(|e| e.incumbent_test).collect();
    let regret: Vec<f64> = test.iter().map(|t| best_test - t).collect();
    let val: Vec<f64> = finals.iter().map(|e| e.incumbent).collect();
    let hits: Vec<f64> = traces.iter().filter_map(|t| t.queries_to(best_id)).map(|q| q as f64).collect();
    let (tm, ts) = mean_std(&test);
    let (rm, rs) = mean_std(&regret);
    MethodSummary {
        method,
        runs: traces.len(),
        final_test_mean: tm,
        final_test_std: ts,
        final_regret_mean: rm,
        final_regret_std: rs,
        final_validation_mean: mean_std(&val).0,
        optimum_found: hits.len(),
        median_queries_to_optimum: if hits.len() == traces.len() { median(&hits) } else { None },
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisOutput {
    pub config_digest: String,
    pub pretrain: PretrainReport,
    pub predictive_fit: PredictiveFit,
    /// rank correlation of edit distance 1..=5 with median L2
    pub edit_profile_spearman: Option<f64>,
    pub neighbor_chain_mean_edit: f64,
    pub random_chain_mean_edit: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct L2Row {
    pub edit_distance: usize,
    pub l2: f64,
}

#[derive(Serialize)]
struct ChainRow {
    chain: usize,
    kind: &'static str,
    position: usize,
    id: u64,
    edit_distance: Option<usize>,
}

fn analyze(ctx: &mut Ctx) -> Result<(), CliError> {
    let model = ctx.model()?;
    let (ids, cells): (Vec<u64>, Vec<CellGraph>) = ctx.dataset()?.into_iter().unzip();
    let a = ctx.loaded.config.analyze.clone();
    let seed = ctx.seed();
    let pretrain = split_report(ctx, &model, &cells, a.n_prior)?;

    let emb = model.embed_all(&cells).map_err(runtime)?;
    let oracle = ctx.oracle()?;
    let acc: Vec<f64> =
        cells.iter().map(|c| oracle.lookup(c).map(|r| r.test_accuracy)).collect::<Result<_, _>>().map_err(runtime)?;
    let gp_seeds: Vec<u64> = (0..a.gp_seeds as u64).map(|k| seed + k).collect();
    let fit = predictive_fit(&emb, &acc, a.gp_n_train.min(cells.len().saturating_sub(1)), a.gp_floor, &gp_seeds)
        .map_err(runtime)?;

    let profile: EditProfile = l2_edit_profile(&model, a.walk_len, a.window, seed).map_err(runtime)?;
    let l2_rows = profile.rows().map(|(edit_distance, l2)| L2Row { edit_distance, l2 });
    ctx.write("l2_edit.csv", write_csv(l2_rows).map_err(runtime)?)?;

    let table = EmbeddingTable::new(ids, emb).map_err(runtime)?;
    let index = build_index(&table).map_err(runtime)?;
    let mut r = rng::substream(seed, "chain-starts");
    let (mut rows, mut nn, mut rand_means) = (Vec::new(), Vec::new(), Vec::new());
    for k in 0..a.chain_runs {
        let start = r.random_range(0..index.len());
        let c = neighbor_sequence(start, &index, &cells, &ctx.loaded.spec, a.chain_length).map_err(runtime)?;
        let q =
            random_chain(start, &index, &cells, &ctx.loaded.spec, a.chain_length, seed + k as u64).map_err(runtime)?;
        for (kind, chain) in [("neighbor", &c), ("random", &q)] {
            for (pos, &id) in chain.ids.iter().enumerate() {
                let edit_distance = pos.checked_sub(1).map(|p| chain.edit_distances[p]);
                rows.push(ChainRow { chain: k, kind, position: pos, id, edit_distance });
            }
        }
        nn.push(c.mean_edit_distance());
        rand_means.push(q.mean_edit_distance());
    }
    ctx.write("neighbor_sequences.csv", write_csv(rows.iter()).map_err(runtime)?)?;

    let out = AnalysisOutput {
        config_digest: ctx.digest().to_string(),
        pretrain,
        predictive_fit: fit,
        edit_profile_spearman: profile.spearman(1, 5),
        neighbor_chain_mean_edit: mean_std(&nn).0,
        random_chain_mean_edit: mean_std(&rand_means).0,
    };
    ctx.write_json("analysis.json", &out)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Option<T>, CliError> {
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(path).map_err(runtime)?;
    serde_json::from_str(&text).map(Some).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"))
}

fn report(ctx: &mut Ctx) -> Result<(), CliError> {
    let pre: Option<PretrainOutput> = read_json(&ctx.out.join("pretrain_report.json"))?;
    let agg: Option<SearchAggregate> = read_json(&ctx.out.join("aggregate.json"))?;
    let ana: Option<AnalysisOutput> = read_json(&ctx.out.join("analysis.json"))?;
    if pre.is_none() && agg.is_none() && ana.is_none() {
        return Err(CliError::Runtime("no pretrain_report.json, aggregate.json or analysis.json to report".into()));
    }
    let mut md = format!("# Run report\n\nconfig digest `{}`\n", ctx.digest());
    let reports = pre.iter().map(|p| &p.report).chain(ana.iter().map(|a| &a.pretrain));
    md.push_str("\n## Pre-training\n\n| variant | reconstruction % | validity % | uniqueness % |\n|---|---|---|---|\n");
    for r in reports {
        md.push_str(&format!(
            "| {} | {:.2} | {:.2} | {} |\n",
            r.variant,
            r.reconstruction_accuracy_pct,
            r.validity_pct,
            pct(r.uniqueness_pct)
        ));
    }
    if let Some(a) = &ana {
        let f = &a.predictive_fit;
        md.push_str(&format!(
            "\n## Latent space\n\nGP fit on {} points: RMSE {:.4} ± {:.4}, Pearson r {} ± {}\n\nedit-distance/L2 rank correlation: {}\n\nmean consecutive edit distance: neighbour chains {:.2}, random chains {:.2}\n",
            f.n_train,
            f.rmse_mean,
            f.rmse_std,
            pct(f.pearson_mean),
            pct(f.pearson_std),
            pct(a.edit_profile_spearman),
            a.neighbor_chain_mean_edit,
            a.random_chain_mean_edit
        ));
    }
    if let Some(g) = &agg {
        md.push_str(&format!(
            "\n## Search\n\nbest validation {:.4}, best test {:.4}\n\n| method | runs | test accuracy | regret | median queries to optimum |\n|---|---|---|---|---|\n",
            g.best_validation, g.best_test
        ));
        for m in &g.methods {
            md.push_str(&format!(
                "| {} | {} | {:.4} ± {:.4} | {:.4} ± {:.4} | {} |\n",
                m.method.label(),
                m.runs,
                m.final_test_mean,
                m.final_test_std,
                m.final_regret_mean,
                m.final_regret_std,
                m.median_queries_to_optimum.map_or("n/a".to_string(), |q| format!("{q}"))
            ));
        }
    }
    ctx.write("report.md", md)
}

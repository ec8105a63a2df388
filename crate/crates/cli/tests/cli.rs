use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use latentnas::archspace::{enumerate, CellGraph, SearchSpaceSpec};
use latentnas::formats::{parse_embeddings, parse_history, parse_trace};
use latentnas::metrics::pretrain_report;
use latentnas::tensor::parse_checkpoint;
use latentnas::vgae::{split_dataset, Vgae};
use serde_json::Value;

const SMALL: &str = r#"
seed = 3
space = { builtin = "synthetic" }

[pretrain.encoder]
hidden = [24, 8]

[pretrain.train]
epochs = 2
kl_weight = 0.03

[eval]
n_prior = 150

[search]
runs = 3
budget_queries = 25
reinforce = { lstm_hidden = 8, archs_per_episode = 4 }
dngo = { basis_hidden = 8, retrain_epochs = 5, init_samples = 4 }

[analyze]
walk_len = 60
window = 4
gp_n_train = 40
gp_seeds = 2
chain_runs = 3
n_prior = 100
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_latentnas"));
    c.env_remove("LATENTNAS_WORKERS");
    c
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg(cmd).arg("--config").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

fn ok(o: &Output) {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn error_kind(o: &Output) -> String {
    let v: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    v["error"].as_str().unwrap().to_string()
}

#[test]
fn missing_config_is_a_config_error_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run("pretrain", &dir.path().join("nope.toml"), &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_kind(&o), "config");
    assert!(!out.exists());
}

#[test]
fn malformed_configs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for text in [
        "seed = 1\nspace = { builtin = \"synthetic\" }\nbogus = 3\n",
        "space = { builtin = \"synthetic\" }\n",
        "seed = 1\nspace = { builtin = \"nowhere\" }\n",
        "seed = 1\nspace = { builtin = \"synthetic\" }\ndataset = \"missing.ndjson\"\n",
        "seed = 1\nspace = { builtin = \"synthetic\" }\n[search]\nreinforce = { gamma = 0.0 }\n",
    ] {
        let cfg = write_config(dir.path(), text);
        let o = run("pretrain", &cfg, &out, &[]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(!out.exists());
    }
}

#[test]
fn bad_worker_override_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = bin()
        .env("LATENTNAS_WORKERS", "zero")
        .args(["pretrain", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_checkpoint_fails_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    for cmd in ["analyze", "embed", "eval-pretrain"] {
        let o = run(cmd, &cfg, &dir.path().join("empty"), &[]);
        assert_eq!(o.status.code(), Some(2), "{cmd}");
    }
    let o = run("report", &cfg, &dir.path().join("empty"), &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(dir.path().join("empty/error.json").exists());
}

#[test]
fn pretrain_is_reproducible_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    ok(&run("pretrain", &cfg, &a, &[]));
    ok(&run("pretrain", &cfg, &b, &[]));
    ok(&run("pretrain", &cfg, &c, &["--seed-override", "4"]));
    let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(read(&a, "checkpoint.bin"), read(&b, "checkpoint.bin"));
    assert_eq!(read(&a, "history.ndjson"), read(&b, "history.ndjson"));
    assert_ne!(read(&a, "checkpoint.bin"), read(&c, "checkpoint.bin"));
    let ma: Value = serde_json::from_slice(&read(&a, "manifest.pretrain.json")).unwrap();
    let mc: Value = serde_json::from_slice(&read(&c, "manifest.pretrain.json")).unwrap();
    assert_ne!(ma["config_digest"], mc["config_digest"]);
    assert_eq!(mc["seed"], 4);
    let ck = parse_checkpoint(&read(&a, "checkpoint.bin")).unwrap();
    assert_eq!(Some(&ma["config_digest"].as_str().unwrap().to_string()), ck.metadata.get("config_digest"));
    assert_eq!(parse_history(&String::from_utf8(read(&a, "history.ndjson")).unwrap()).unwrap().len(), 2);
}

#[test]
fn full_pipeline_outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("run");
    for cmd in ["pretrain", "embed", "eval-pretrain", "search", "analyze", "report"] {
        ok(&run(cmd, &cfg, &out, &[]));
    }
    let spec = SearchSpaceSpec::synthetic();
    let cells: Vec<CellGraph> = enumerate(&spec).unwrap().collect();
    let table = parse_embeddings(&std::fs::read_to_string(out.join("embeddings.ndjson")).unwrap()).unwrap();
    assert_eq!(table.len(), cells.len());
    assert_eq!(table.dim(), 8);

    // the written report equals a direct library computation
    let model =
        Vgae::from_checkpoint(&parse_checkpoint(&std::fs::read(out.join("checkpoint.bin")).unwrap()).unwrap()).unwrap();
    let (tr, ho) = split_dataset(cells.len(), 0.1, 3);
    let tr: Vec<&CellGraph> = tr.iter().map(|&i| &cells[i]).collect();
    let ho: Vec<&CellGraph> = ho.iter().map(|&i| &cells[i]).collect();
    let direct = pretrain_report(&model, &tr, &ho, 150, 3).unwrap();
    let written: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("pretrain_report.json")).unwrap()).unwrap();
    assert_eq!(written["report"], serde_json::to_value(&direct).unwrap());

    // aggregate means recomputed from the trace files
    let agg: Value = serde_json::from_str(&std::fs::read_to_string(out.join("aggregate.json")).unwrap()).unwrap();
    for m in agg["methods"].as_array().unwrap() {
        let label = m["method"].as_str().unwrap();
        let finals: Vec<f64> = (0..3)
            .map(|r| {
                let t =
                    parse_trace(&std::fs::read_to_string(out.join(format!("traces/{label}-{r:03}.ndjson"))).unwrap())
                        .unwrap();
                assert_eq!(t.len(), 25);
                t.last().unwrap().incumbent_test
            })
            .collect();
        assert_eq!(m["runs"], 3);
        let mean = finals.iter().sum::<f64>() / 3.0;
        assert!((m["final_test_mean"].as_f64().unwrap() - mean).abs() < 1e-12);
    }
    let csv = std::fs::read_to_string(out.join("l2_edit.csv")).unwrap();
    assert!(csv.starts_with("edit_distance,l2\n"));
    let analysis: Value = serde_json::from_str(&std::fs::read_to_string(out.join("analysis.json")).unwrap()).unwrap();
    assert_eq!(analysis["predictive_fit"]["seeds"].as_array().unwrap().len(), 2);
    assert!(std::fs::read_to_string(out.join("report.md")).unwrap().contains("| dngo | 3 |"));
}

#[test]
fn single_query_search_and_identical_traces() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("runs = 3\nbudget_queries = 25", "runs = 1\nbudget_queries = 1");
    let cfg = write_config(dir.path(), &text);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&run("pretrain", &cfg, out, &[]));
        ok(&run("embed", &cfg, out, &[]));
        ok(&run("search", &cfg, out, &[]));
    }
    for m in ["reinforce", "dngo", "random"] {
        let f = format!("traces/{m}-000.ndjson");
        let ta = std::fs::read_to_string(a.join(&f)).unwrap();
        assert_eq!(parse_trace(&ta).unwrap().len(), 1);
        assert_eq!(ta, std::fs::read_to_string(b.join(&f)).unwrap());
    }
    assert_eq!(std::fs::read(a.join("aggregate.json")).unwrap(), std::fs::read(b.join("aggregate.json")).unwrap());
}

//! Command-line pipeline: pretrain, embed, eval-pretrain, search, analyze, report.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

pub const WORKERS_ENV: &str = "LATENTNAS_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Pretrain,
    Embed,
    EvalPretrain,
    Search,
    Analyze,
    Report,
}

#[derive(Debug, Parser)]
#[command(name = "latentnas", version, about = "Architecture embedding pre-training and search")]
struct Args {
    command: Command,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed_override: Option<u64>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Runtime(_) => "runtime",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

pub fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn configure_workers() -> Result<(), CliError> {
    let Ok(v) = std::env::var(WORKERS_ENV) else { return Ok(()) };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{WORKERS_ENV}={v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(runtime)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = configure_workers()
        .and_then(|_| config::load(&args.config, args.seed_override))
        .and_then(|loaded| commands::run(args.command, loaded, &args.out));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::json!({ "error": e.kind(), "message": e.message() });
            eprintln!("{record}");
            if matches!(e, CliError::Runtime(_)) && args.out.is_dir() {
                let _ = std::fs::write(args.out.join("error.json"), format!("{record}\n"));
            }
            ExitCode::from(e.exit_code())
        }
    }
}

//! `kinklab <experiment> --config <path> [--out <dir>] [--threads N] [--seed S]`
//!
//! Experiments: `residual-scaling`, `theorem5`, `metastability`,
//! `coercivity`, `selftest`. Configuration is a flat `key = value` file;
//! unknown keys are hard errors. Outputs land in the chosen directory:
//! per-run error-series CSVs, `summary.csv`, `report.txt`, and a
//! gnuplot-ready `slope_<experiment>.dat`.

use clap::Parser;
use kinklab_core::config::{ExperimentConfig, ExperimentKind};
use kinklab_core::harness::run_experiment;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "kinklab", version, about = "FPUT kink modulation laboratory")]
struct Cli {
    /// Experiment to run: residual-scaling | theorem5 | metastability |
    /// coercivity | selftest
    experiment: String,

    /// Flat key=value configuration file (defaults apply when omitted).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory for reports and CSVs.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads for ε sweeps (0 = library default).
    #[arg(long)]
    threads: Option<usize>,

    /// Seed for any randomized inputs (perturbations).
    #[arg(long)]
    seed: Option<u64>,
}

fn run(cli: Cli) -> Result<bool, String> {
    let kind: ExperimentKind = cli.experiment.parse().map_err(|e| format!("{e}"))?;
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?,
        None => String::new(),
    };
    let mut cfg = ExperimentConfig::parse(&text).map_err(|e| format!("{e}"))?;
    cfg.kind = kind;
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }

    let outcome = run_experiment(&cfg).map_err(|e| format!("{e}"))?;
    for v in &outcome.verdicts {
        println!("{}", v.line());
    }
    println!("report: {}", outcome.report_path.display());
    Ok(outcome.all_pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more verdicts failed");
            ExitCode::FAILURE
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

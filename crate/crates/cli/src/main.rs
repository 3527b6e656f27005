//! `gradsq` command-line driver.
//!
//! Every subcommand reads an experiment config, runs it, and writes
//! `report.json` plus one CSV per table. Exit status is 0 when every
//! criterion passes, 2 on a tolerance failure and 1 on an error.

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use gradsq::experiments::{self, ExperimentConfig, ExperimentKind};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "gradsq", version, about = "Gradient-squared Gaussian free field experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; defaults to the config `output` or `./out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads; GRADSQ_THREADS takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Solve and check the Dirichlet Green's function.
    Green,
    /// Infinite-volume constant chi.
    Chi,
    /// Exact k-point moment or cumulant for one request.
    Kpoint,
    /// Decay of higher cumulants of the rescaled pairing.
    Cumulant,
    /// Covariance structure of the white-noise limit.
    Whitenoise,
    /// Conformal covariance on the disk.
    Conformal,
    /// Convergence of rescaled Green's function differences.
    GreenConvergence,
    /// Monte Carlo cumulants with per-replicate dump.
    Sample,
}

impl Command {
    fn kind(self) -> ExperimentKind {
        match self {
            Command::Green => ExperimentKind::Green,
            Command::Chi => ExperimentKind::Chi,
            Command::Kpoint => ExperimentKind::Kpoint,
            Command::Cumulant => ExperimentKind::Cumulant,
            Command::Whitenoise => ExperimentKind::Whitenoise,
            Command::Conformal => ExperimentKind::Conformal,
            Command::GreenConvergence => ExperimentKind::GreenConvergence,
            Command::Sample => ExperimentKind::Sample,
        }
    }
}

fn thread_count(flag: Option<usize>) -> anyhow::Result<Option<usize>> {
    match std::env::var("GRADSQ_THREADS") {
        Ok(v) if !v.trim().is_empty() => {
            let n: usize = v
                .trim()
                .parse()
                .with_context(|| format!("GRADSQ_THREADS={v} is not a thread count"))?;
            Ok(Some(n))
        }
        _ => Ok(flag),
    }
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    if let Some(n) = thread_count(cli.threads)? {
        if n == 0 {
            bail!("thread count must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let path = cli.config.context("--config is required")?;
    let mut cfg = ExperimentConfig::from_path(&path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let kind = cli.command.kind();
    if cfg.experiment != kind {
        bail!(
            "config describes '{}' but the subcommand is '{}'",
            cfg.experiment.name(),
            kind.name()
        );
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli
        .out
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));

    log::info!("running {}", kind.name());
    let report = experiments::run(&cfg)?;
    report
        .write(&out)
        .with_context(|| format!("writing results to {}", out.display()))?;
    for c in &report.criteria {
        println!(
            "{} {} value={:e} tol={:e} ({})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance,
            c.tolerance_key
        );
    }
    println!("report: {}", out.join("report.json").display());
    Ok(report.passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

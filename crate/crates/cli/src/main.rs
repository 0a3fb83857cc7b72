//! Command-line front end for the whitened synthetic-likelihood sampler.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use commands::study::StudyKind;

#[derive(Parser, Debug)]
#[command(
    name = "wbsl",
    version,
    about = "Simulation-based Bayesian inference with whitened synthetic likelihood",
    propagate_version = true
)]
struct Cli {
    /// Path to the JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides WBSL_SEED and the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; overrides WBSL_OUT and the config file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for parallel simulation (default 1).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Find (n, gamma) settings that put the log-likelihood SD in the target band.
    Tune,
    /// Run the Metropolis–Hastings chain and write it to CSV.
    Sample,
    /// Run a diagnostic study.
    Study {
        #[arg(value_enum)]
        kind: StudyArg,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StudyArg {
    /// Total-variation distance between two saved chains.
    Tv,
    /// Log-likelihood variance under full and diagonal estimation schedules.
    Variance,
    /// Whitening deviation from identity away from the estimation point.
    Deviation,
    /// Posterior sensitivity to the whitening-estimation point.
    Sensitivity,
}

impl StudyArg {
    fn kind(self) -> StudyKind {
        match self {
            StudyArg::Tv => StudyKind::Tv,
            StudyArg::Variance => StudyKind::Variance,
            StudyArg::Deviation => StudyKind::Deviation,
            StudyArg::Sensitivity => StudyKind::Sensitivity,
        }
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    let cli = Cli::parse();
    let config_path = cli
        .config
        .as_deref()
        .context("--config <path> is required")?;
    let loaded = config::load(config_path, cli.seed, cli.out.clone())?;

    let threads = cli.threads.unwrap_or(1);
    if threads == 0 {
        anyhow::bail!("--threads must be at least 1");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("cannot build the worker thread pool")?;

    pool.install(|| match cli.command {
        Command::Tune => commands::tune::run(&loaded, threads),
        Command::Sample => commands::sample::run(&loaded, threads),
        Command::Study { kind } => commands::study::run(&loaded, kind.kind(), threads),
    })
}

//! `hetcop`: simulate, transform, fit, summarize and backtest time-series
//! copula models from the command line.

mod commands;
mod config;
mod exit;
mod io;

use clap::{Parser, Subcommand};
use commands::{backtest, fit, metrics, pit, replicate, simulate};
use exit::{CliResult, WithCode};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "hetcop", version, about = "Time-series copula models for heteroskedastic data")]
struct Cli {
    /// Worker threads for parallel sections (default: logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// JSON settings file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a benchmark process or a fitted copula model to CSV.
    Simulate(simulate::Args),
    /// Fit a KDE margin per column and write the PIT values.
    Pit(pit::Args),
    /// Fit margins and a D-vine copula by MLE or MCMC.
    Fit(fit::Args),
    /// Dependence metrics of a fitted model (and of data, if given).
    Metrics(metrics::Args),
    /// In-sample one-step VaR exceedance table with Christoffersen tests.
    Backtest(backtest::Args),
    /// Run a self-contained replication study.
    Replicate(replicate::Args),
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return exit::fail(exit::VALIDATION, "--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .invalid()?;
    }
    let cfg = cli.config.as_deref();
    match cli.command {
        Command::Simulate(a) => simulate::run(&config::resolve(&a, cfg, "simulate")?),
        Command::Pit(a) => pit::run(&config::resolve(&a, cfg, "pit")?),
        Command::Fit(a) => fit::run(&config::resolve(&a, cfg, "fit")?),
        Command::Metrics(a) => metrics::run(&config::resolve(&a, cfg, "metrics")?),
        Command::Backtest(a) => backtest::run(&config::resolve(&a, cfg, "backtest")?),
        Command::Replicate(a) => replicate::run(&config::resolve(&a, cfg, "replicate")?),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(f) = run(cli) {
        eprintln!("error: {f}");
        std::process::exit(f.code);
    }
}

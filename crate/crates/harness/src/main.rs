//! CLI front-end: one subcommand per scenario, JSON config in, CSV out.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sketchbeam_harness::{config::Scenario, runner, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "sketchbeam",
    version,
    about = "Sketched regularized zero-forcing experiment driver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solution and sum-rate error vs sketch size across sampling schemes.
    SamplingCompare(RunArgs),
    /// Per-user rate vs transmit SNR (P/σ²), exact and sketched.
    SnrSweep(RunArgs),
    /// Solution error vs iteration, with certified bound columns.
    Convergence(RunArgs),
    /// Sum-rate error vs iteration, with certified bound columns.
    SumrateConvergence(RunArgs),
    /// Wall-clock scaling of the exact solve and the sketched iteration.
    Bench(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to a JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; overrides the config's output_path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master-seed override.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (expected, args) = match &cli.command {
        Command::SamplingCompare(a) => (Scenario::SamplingCompare, a),
        Command::SnrSweep(a) => (Scenario::SnrSweep, a),
        Command::Convergence(a) => (Scenario::Convergence, a),
        Command::SumrateConvergence(a) => (Scenario::SumrateConvergence, a),
        Command::Bench(a) => (Scenario::Bench, a),
    };

    let mut cfg = ExperimentConfig::load(&args.config)?;
    if cfg.scenario != expected {
        bail!(
            "config declares scenario `{}` but the `{}` subcommand was invoked",
            cfg.scenario.label(),
            expected.label()
        );
    }
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    cfg.validate().context("invalid experiment config")?;

    let doc = runner::execute(&cfg)?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output_path.clone())
        .context("no output path: pass --out or set output_path in the config")?;
    doc.write_to(&out)?;
    println!("wrote {} rows to {}", doc.rows.len(), out.display());
    Ok(())
}

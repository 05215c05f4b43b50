use std::path::PathBuf;
use std::process::ExitCode;

use bayes_epi::experiments::{self, ExperimentConfig, ExperimentError, ExperimentKind};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bayes-epi", version, about = "Bayesian risk models and tuned Cox survival models for epidemiological data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Low-dimensional binary-outcome simulation: Bayes vs MLE.
    SimBinary(RunArgs),
    /// High-dimensional correlated binary-outcome simulation.
    SimHighdim(RunArgs),
    /// Survival simulation: oracle, CV-tuned lasso and BO-tuned elastic net.
    SimSurvival(RunArgs),
    /// Bayesian logistic risk model on a CSV with screening decisions.
    FitBinary(RunArgs),
    /// Elastic-net Cox model on a survival CSV tuned by Bayesian optimization.
    TuneCox(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Key = value configuration file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Base output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output subdirectory name (default `seed-<N>`).
    #[arg(long)]
    tag: Option<String>,
    /// CSV input for fit-binary and tune-cox.
    #[arg(long)]
    data: Option<PathBuf>,
}

fn build_config(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = ExperimentConfig::load(kind, &args.config)?;
    if let Some(s) = args.seed {
        cfg.set("seed", &s.to_string())?;
    }
    if let Some(o) = &args.out {
        cfg.set("out", &o.display().to_string())?;
    }
    if let Some(r) = args.replicates {
        if !kind.is_simulation() {
            return Err(ExperimentError::Config(format!("--replicates does not apply to {kind}")));
        }
        cfg.set("replicates", &r.to_string())?;
    }
    if let Some(w) = args.workers {
        cfg.set("workers", &w.to_string())?;
    }
    if let Some(t) = &args.tag {
        cfg.set("tag", t)?;
    }
    if let Some(d) = &args.data {
        cfg.set("data", &d.display().to_string())?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::SimBinary(a) => (ExperimentKind::SimBinary, a),
        Command::SimHighdim(a) => (ExperimentKind::SimHighdim, a),
        Command::SimSurvival(a) => (ExperimentKind::SimSurvival, a),
        Command::FitBinary(a) => (ExperimentKind::FitBinary, a),
        Command::TuneCox(a) => (ExperimentKind::TuneCox, a),
    };
    match build_config(kind, args).and_then(|cfg| experiments::run(&cfg)) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("bayes-epi {kind}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dense_mimo::harness::{self, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "dense-mimo", version, about = "Dense-array MIMO capacity experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Magnitude of the DFT beams over the physical angle.
    BeamPattern(RunArgs),
    /// Full-CSI capacity of G and its truncation.
    Fig2(RunArgs),
    /// CSIR capacity across antenna separations.
    Fig3(RunArgs),
    /// QPSK LMMSE-SIC rate against Gaussian capacity.
    QpskSweep(RunArgs),
    /// Grid checks of the kernel lemmas.
    LemmaCheck(RunArgs),
    /// Equivalence gaps as the arrays grow.
    TheoremSweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV (default: <experiment>.csv).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, env = "MIMO_DENSE_THREADS")]
    threads: Option<usize>,
}

impl Command {
    fn split(self) -> (Experiment, RunArgs) {
        match self {
            Command::BeamPattern(a) => (Experiment::BeamPattern, a),
            Command::Fig2(a) => (Experiment::Fig2, a),
            Command::Fig3(a) => (Experiment::Fig3, a),
            Command::QpskSweep(a) => (Experiment::QpskSweep, a),
            Command::LemmaCheck(a) => (Experiment::LemmaCheck, a),
            Command::TheoremSweep(a) => (Experiment::TheoremSweep, a),
        }
    }
}

fn build_config(experiment: Experiment, args: &RunArgs) -> dense_mimo::Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::from_toml_str(&std::fs::read_to_string(path)?, Some(experiment))?,
        None => ExperimentConfig::defaults_for(experiment),
    };
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(out) = &args.out {
        config.output_path = Some(out.to_string_lossy().into_owned());
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let (experiment, args) = Cli::parse().command.split();
    let result = build_config(experiment, &args).and_then(|config| {
        let out = PathBuf::from(
            config
                .output_path
                .clone()
                .unwrap_or_else(|| format!("{experiment}.csv")),
        );
        let summary = dense_mimo::par::with_threads(args.threads, || harness::run_to_file(&config, &out))?;
        Ok((summary, out))
    });
    match result {
        Ok((summary, out)) => {
            eprintln!(
                "{experiment}: {} rows -> {} (config {})",
                summary.table.rows.len(),
                out.display(),
                summary.config_hash
            );
            if summary.failures > 0 {
                eprintln!("{experiment}: {} check(s) failed", summary.failures);
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

//! Reproducible experiment runs: configuration, drivers and CSV output.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::Path;

pub use config::{Experiment, ExperimentConfig};
pub use output::{Table, TOOL_VERSION};

use crate::error::Result;

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub experiment: Experiment,
    pub config_hash: String,
    pub table: Table,
    /// Failed checks; only `lemma_check` reports any.
    pub failures: usize,
}

impl RunSummary {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        self.table.to_csv(&self.config_hash)
    }
}

/// Validates `config` and runs its experiment on the current thread pool.
pub fn run(config: &ExperimentConfig) -> Result<RunSummary> {
    config.validate()?;
    let mut failures = 0;
    let table = match config.experiment {
        Experiment::BeamPattern => experiments::beam_pattern_table(config)?,
        Experiment::Fig2 => experiments::fig2_table(config)?,
        Experiment::Fig3 => experiments::fig3_table(config)?,
        Experiment::QpskSweep => experiments::qpsk_sweep_table(config)?,
        Experiment::TheoremSweep => experiments::theorem_sweep_table(config)?,
        Experiment::LemmaCheck => {
            let (t, f) = experiments::lemma_check_table(config)?;
            failures = f;
            t
        }
    };
    Ok(RunSummary {
        experiment: config.experiment,
        config_hash: config.hash(),
        table,
        failures,
    })
}

/// Runs and atomically writes the CSV to `path`.
pub fn run_to_file(config: &ExperimentConfig, path: &Path) -> Result<RunSummary> {
    let summary = run(config)?;
    output::write_atomic(path, &summary.to_csv()?)?;
    Ok(summary)
}

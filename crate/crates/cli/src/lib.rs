//! Experiment runner for concatenated DFS blocks.
//!
//! [`run`] resolves a config, checks the qubit cap, runs one experiment and
//! writes `<experiment>.json` and `<experiment>.csv` into the output directory.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

use std::path::{Path, PathBuf};

use dfsblock_core::operators::{Limits, DEFAULT_MAX_QUBITS};

pub use config::{Config, Experiment, Overrides};
pub use error::CliError;
pub use report::{Report, Status};

pub const MAX_QUBITS_ENV: &str = "DFSBLOCK_MAX_QUBITS";

/// Qubit cap from `DFSBLOCK_MAX_QUBITS`, or the library default when unset.
pub fn limits_from_env(value: Option<&str>) -> Result<Limits, CliError> {
    match value {
        None => Ok(Limits { max_qubits: DEFAULT_MAX_QUBITS }),
        Some(v) => v
            .trim()
            .parse::<usize>()
            .map(|max_qubits| Limits { max_qubits })
            .map_err(|_| CliError::Validation(format!("{MAX_QUBITS_ENV} must be a non-negative integer, got {v:?}"))),
    }
}

pub struct RunOutput {
    pub report: Report,
    pub json: PathBuf,
    pub csv: PathBuf,
}

pub fn run(experiment: Experiment, mut config: Config, limits: Limits, out_dir: &Path) -> Result<RunOutput, CliError> {
    config.resolve(experiment);
    config.validate()?;
    limits.check(experiment.qubits(&config))?;
    let outcome = experiments::run(experiment, &config)?;
    let (report, json, csv) = report::write_outputs(out_dir, experiment.name(), &config, outcome)?;
    Ok(RunOutput { report, json, csv })
}

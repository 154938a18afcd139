//! Configuration-driven experiments for the space-time Trefftz DG solver:
//! single runs, h-, p- and flux sweeps, update-matrix spectra and energy
//! audits, written as CSV tables with a run manifest.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod svg;

use std::path::{Path, PathBuf};

pub use config::{Diagnostic, ExperimentConfig, ExperimentKind};
pub use error::{CliError, ConfigError};
pub use experiment::{run_experiment, Outcome, ResultRow};

/// Environment variable overriding `output.dir`.
pub const OUTPUT_DIR_ENV: &str = "TREFFTZ_OUTPUT_DIR";

/// Output directory: explicit flag, then the environment, then the config.
pub fn resolve_output_dir(cfg: &ExperimentConfig, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_owned)
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| cfg.output.dir.clone())
}

/// Validates, runs and writes all artifacts into `cfg.output.dir`.
pub fn execute(cfg: &ExperimentConfig, command: &str) -> Result<(Outcome, Vec<PathBuf>), CliError> {
    let diagnostics = cfg.validate();
    if !diagnostics.is_empty() {
        return Err(ConfigError::Invalid(diagnostics).into());
    }
    let outcome = run_experiment(cfg)?;
    let files = output::write_outputs(cfg, &outcome, &cfg.output.dir, command)?;
    Ok((outcome, files))
}

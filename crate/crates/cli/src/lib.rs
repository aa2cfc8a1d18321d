//! Batch driver: one JSON config in, CSV and JSON artefacts out.

pub mod commands;
pub mod config;
mod output;

use std::path::{Path, PathBuf};

pub use config::{Command, ExperimentConfig};
pub use output::{fmt_f64, Output};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] hkbounds::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    /// 2 for domain errors, 3 for accuracy-window and convergence failures,
    /// 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use hkbounds::Error as E;
        match self {
            CliError::Core(E::Domain(_) | E::DomainExit { .. } | E::Precondition(_)) => 2,
            CliError::Core(E::Accuracy(_) | E::Convergence(_)) => 3,
            _ => 1,
        }
    }
}

/// Runs `cfg` and writes its artefacts under `out_dir`; returns the files
/// written, in order.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Output::create(out_dir)?;
    match cfg.command() {
        Command::Simulate => commands::simulate(cfg, &mut out)?,
        Command::DensityEval => commands::density_eval(cfg, &mut out)?,
        Command::ValueFn => commands::value_fn(cfg, &mut out)?,
        Command::Chain => commands::chain(cfg, &mut out)?,
        Command::CcDistance => commands::cc_distance(cfg, &mut out)?,
        Command::Verify => commands::verify(cfg, &mut out)?,
        Command::CalibrateHjb => commands::calibrate_hjb(cfg, &mut out)?,
    }
    Ok(out.into_files())
}

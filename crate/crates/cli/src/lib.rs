//! Library side of the `thinlaw` command.

pub mod config;
pub mod experiments;
pub mod output;

use std::io;
use std::path::PathBuf;

use config::{ConfigError, Experiment, ExperimentConfig, RawConfig};
use experiments::Report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECKS_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("invalid parameters: {0}")]
    Compute(#[from] thinlaw_core::Error),
    #[error("I/O error on {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Compute(_) => EXIT_CONFIG,
            Self::Io { .. } => EXIT_IO,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Flat,
    Toml,
}

impl FileFormat {
    /// TOML for `.toml` files, the flat format otherwise.
    pub fn for_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => Self::Toml,
            _ => Self::Flat,
        }
    }
}

/// Layers the sources by precedence. Config file values lose to `key=value`
/// arguments, which lose to `--seed` and `--out`.
pub fn assemble_config(
    experiment: Experiment,
    file: Option<(&str, FileFormat)>,
    overrides: &[String],
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<ExperimentConfig, ConfigError> {
    let mut raw = match file {
        Some((text, FileFormat::Flat)) => RawConfig::parse_flat(text)?,
        Some((text, FileFormat::Toml)) => RawConfig::parse_toml(text)?,
        None => RawConfig::new(),
    };
    let mut args = RawConfig::new();
    for token in overrides {
        args.insert_token(token)?;
    }
    raw = raw.overlay(args);
    match raw.get("experiment") {
        Some(named) if named != experiment.as_str() => {
            return Err(ConfigError::Invalid {
                field: "experiment".into(),
                message: format!("config names `{named}` but the command is `{experiment}`"),
            })
        }
        _ => raw.set("experiment", experiment.as_str().into()),
    }
    if let Some(seed) = seed {
        raw.set("seed", seed.to_string());
    }
    if let Some(out) = out {
        raw.set("out", out.to_string_lossy().into_owned());
    }
    ExperimentConfig::from_raw(&raw)
}

/// Result of a completed run.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub csv: PathBuf,
    pub summary: PathBuf,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.report.passed() {
            EXIT_OK
        } else {
            EXIT_CHECKS_FAILED
        }
    }
}

/// Runs the experiment and writes its CSV and summary.
pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let report = experiments::run_experiment(cfg)?;
    let (csv, summary) = output::write_outputs(&report, cfg).map_err(|(path, source)| RunError::Io { path, source })?;
    Ok(Outcome { report, csv, summary })
}

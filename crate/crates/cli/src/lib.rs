//! Scenario runner for the relatime library.
//!
//! A scenario builds a global eigenstate from a JSON configuration, sweeps a
//! `(γ, λ)` grid, writes one CSV row per grid point and a JSON summary with
//! the residual of every check relevant to that scenario.

use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod config;
pub mod output;
pub mod scenario;

pub use config::{ScenarioConfig, ScenarioName};
pub use output::{Check, Row, Summary};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot write output: {0}")]
    Output(String),
    #[error("numerical failure: {0}")]
    Numerical(relatime::Error),
}

impl From<relatime::Error> for CliError {
    fn from(e: relatime::Error) -> Self {
        use relatime::Error as E;
        match e {
            E::DimensionCap { .. }
            | E::DimensionMismatch(_)
            | E::InvalidDimension(_)
            | E::EnvironmentTooSmall { .. }
            | E::NotUnitary(_)
            | E::InvalidSchmidt(_)
            | E::InvalidConditioning(_)
            | E::UnsupportedByConditioning
            | E::InvalidArgument(_) => CliError::Config(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub summary: Summary,
    pub rows: Vec<Row>,
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
}

impl Outcome {
    /// 0 when every check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.summary.passed {
            0
        } else {
            1
        }
    }
}

/// Runs a scenario and writes `<out_dir>/<csv>` and `<out_dir>/<json>`.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    let report = scenario::execute(cfg)?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Output(format!("{}: {e}", out_dir.display())))?;
    let csv_path = out_dir.join(cfg.csv_name());
    let json_path = out_dir.join(cfg.json_name());
    let passed = report.checks.iter().all(|c| c.passed);
    let summary = Summary {
        schema: output::SCHEMA_VERSION,
        version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: cfg.scenario.to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        rows: report.rows.len(),
        checks: report.checks.clone(),
        diagnostics: report.diagnostics.clone(),
        gram_matrix: report.gram_json(),
        passed,
    };
    output::emit_csv(&report.rows, &csv_path)?;
    output::emit_json(&summary, &json_path)?;
    Ok(Outcome {
        summary,
        rows: report.rows,
        csv_path,
        json_path,
    })
}

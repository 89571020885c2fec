//! CSV table and JSON summary emission.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 9] = [
    "gamma",
    "lambda",
    "entropy",
    "mean_energy_sys",
    "mean_energy_env",
    "log_z",
    "canonical_residual",
    "energy_sum_residual",
    "entropy_partition_residual",
];

/// One grid point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub gamma: f64,
    pub lambda: f64,
    pub entropy: f64,
    pub mean_energy_sys: f64,
    pub mean_energy_env: f64,
    pub log_z: f64,
    pub canonical_residual: f64,
    pub energy_sum_residual: f64,
    pub entropy_partition_residual: f64,
}

impl Row {
    pub fn values(&self) -> [f64; 9] {
        [
            self.gamma,
            self.lambda,
            self.entropy,
            self.mean_energy_sys,
            self.mean_energy_env,
            self.log_z,
            self.canonical_residual,
            self.energy_sum_residual,
            self.entropy_partition_residual,
        ]
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn render_csv(rows: &[Row]) -> String {
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    for row in rows {
        let fields: Vec<String> = row.values().iter().map(|&x| format_float(x)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn emit_csv(rows: &[Row], path: &Path) -> Result<(), CliError> {
    if rows.is_empty() {
        return Err(CliError::Config("refusing to write an empty table".into()));
    }
    write_file(path, render_csv(rows).as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when the residual does not exceed the tolerance (NaN fails).
    pub fn at_most(name: &str, max_residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            max_residual,
            tolerance,
            passed: max_residual <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexMatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&relatime::CMatrix> for ComplexMatrixJson {
    fn from(m: &relatime::CMatrix) -> Self {
        let rows = |f: fn(&relatime::C64) -> f64| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        Self {
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema: u32,
    pub version: String,
    pub scenario: String,
    pub seed: u64,
    pub config: ScenarioConfig,
    pub rows: usize,
    pub checks: Vec<Check>,
    /// Informational values that carry no pass/fail verdict.
    pub diagnostics: serde_json::Map<String, serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gram_matrix: Option<ComplexMatrixJson>,
    pub passed: bool,
}

pub fn emit_json(summary: &Summary, path: &Path) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(summary).map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Output(format!("{}: {e}", path.display()));
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(bytes).map_err(io)
}

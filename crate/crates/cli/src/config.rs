//! Scenario configuration: a JSON document plus command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    CanonicalEmergence,
    ThermoSweep,
    Dynamics,
    SchmidtConditioning,
    Interaction,
    InvarianceCheck,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 6] = [
        Self::CanonicalEmergence,
        Self::ThermoSweep,
        Self::Dynamics,
        Self::SchmidtConditioning,
        Self::Interaction,
        Self::InvarianceCheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::CanonicalEmergence => "canonical-emergence",
            Self::ThermoSweep => "thermo-sweep",
            Self::Dynamics => "dynamics",
            Self::SchmidtConditioning => "schmidt-conditioning",
            Self::Interaction => "interaction",
            Self::InvarianceCheck => "invariance-check",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ScenarioName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| format!("unknown scenario {s:?}"))
    }
}

/// Random spectrum drawn uniformly from `range`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpectrum {
    pub range: [f64; 2],
    /// Falls back to the top-level seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    /// Energy eigenvectors are the computational basis.
    #[default]
    Diagonal,
    /// Energy eigenvectors are the columns of a seeded random unitary.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energies: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomSpectrum>,
    #[serde(default)]
    pub basis: BasisKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    /// Defaults to the system dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_env: Option<usize>,
    #[serde(default)]
    pub e_tot: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Conditioning {
    Uniform,
    FromSchmidt,
    Weights(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn single(value: f64) -> Self {
        Self {
            start: value,
            stop: value,
            points: 1,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => Vec::new(),
            1 => vec![self.start],
            n => {
                let step = (self.stop - self.start) / (n - 1) as f64;
                (0..n)
                    .map(|k| {
                        if k == n - 1 {
                            self.stop
                        } else {
                            self.start + step * k as f64
                        }
                    })
                    .collect()
            }
        }
    }

    pub fn step(&self) -> Option<f64> {
        (self.points >= 2).then(|| (self.stop - self.start) / (self.points - 1) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InteractionKind {
    Zero,
    #[default]
    Scalar,
    /// Seeded random Hermitian blocks.
    Generic,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionConfig {
    #[serde(default)]
    pub kind: InteractionKind,
    /// Per-branch shifts for scalar blocks; drawn from `[-1, 1)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shifts: Option<Vec<f64>>,
    /// Eigenpair index chosen in each branch; `0, 1, …, D−1` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branches: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateKind {
    #[default]
    Eigenstate,
    /// `(|φ₀⟩⊗|0⟩ + |φ₀⟩⊗|1⟩)/√2`, which mixes two environment energies.
    NonEigenstate,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioName,
    #[serde(default)]
    pub seed: u64,
    pub system: SystemConfig,
    #[serde(default = "default_environment")]
    pub environment: EnvironmentConfig,
    /// Squared Schmidt coefficients `a_J²`; normalized on use.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schmidt_weights: Option<Vec<f64>>,
    #[serde(default = "default_conditioning")]
    pub conditioning: Conditioning,
    pub gamma: Grid,
    #[serde(default = "default_lambda")]
    pub lambda: Grid,
    /// RK4 steps per unit of flow parameter.
    #[serde(default = "default_steps")]
    pub integrator_steps: usize,
    #[serde(default)]
    pub interaction: InteractionConfig,
    #[serde(default)]
    pub state: StateKind,
    #[serde(default)]
    pub output: OutputConfig,
    /// Per-check tolerance overrides keyed by check name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
}

fn default_environment() -> EnvironmentConfig {
    EnvironmentConfig {
        d_env: None,
        e_tot: 0.0,
    }
}

fn default_conditioning() -> Conditioning {
    Conditioning::Uniform
}

fn default_lambda() -> Grid {
    Grid::single(0.0)
}

fn default_steps() -> usize {
    1000
}

impl ScenarioConfig {
    /// Qubit with energies `(0, 1)`, γ ∈ [0, 5] on 51 points.
    pub fn default_for(scenario: ScenarioName) -> Self {
        let mut cfg = Self {
            scenario,
            seed: 0,
            system: SystemConfig {
                dimension: 2,
                energies: Some(vec![0.0, 1.0]),
                random: None,
                basis: BasisKind::Diagonal,
            },
            environment: default_environment(),
            schmidt_weights: None,
            conditioning: default_conditioning(),
            gamma: Grid {
                start: 0.0,
                stop: 5.0,
                points: 51,
            },
            lambda: default_lambda(),
            integrator_steps: default_steps(),
            interaction: InteractionConfig::default(),
            state: StateKind::default(),
            output: OutputConfig::default(),
            tolerances: BTreeMap::new(),
        };
        match scenario {
            ScenarioName::SchmidtConditioning => {
                cfg.schmidt_weights = Some(vec![0.9, 0.1]);
                cfg.conditioning = Conditioning::FromSchmidt;
            }
            ScenarioName::Dynamics => {
                cfg.lambda = Grid {
                    start: 0.0,
                    stop: 10.0,
                    points: 2,
                }
            }
            _ => {}
        }
        cfg
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn d_env(&self) -> usize {
        self.environment.d_env.unwrap_or(self.system.dimension)
    }

    pub fn csv_name(&self) -> String {
        self.output
            .csv
            .clone()
            .unwrap_or_else(|| format!("{}.csv", self.scenario))
    }

    pub fn json_name(&self) -> String {
        self.output
            .json
            .clone()
            .unwrap_or_else(|| format!("{}.json", self.scenario))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let d = self.system.dimension;
        if d == 0 {
            return bad("system dimension must be positive".into());
        }
        let cap = relatime::hilbert::dim_cap();
        if d.saturating_mul(self.d_env()) > cap {
            return bad(format!("dimension {d}×{} exceeds cap {cap}", self.d_env()));
        }
        match (&self.system.energies, &self.system.random) {
            (Some(e), None) if e.len() != d => {
                return bad(format!("{} energies given for dimension {d}", e.len()));
            }
            (Some(e), None) if e.iter().any(|x| !x.is_finite()) => return bad("energies must be finite".into()),
            (Some(_), None) => {}
            (None, Some(r)) if r.range[0] >= r.range[1] || r.range.iter().any(|x| !x.is_finite()) => {
                return bad(format!("invalid random range {:?}", r.range));
            }
            (None, Some(_)) => {}
            _ => return bad("system needs exactly one of `energies` or `random`".into()),
        }
        for (name, grid) in [("gamma", &self.gamma), ("lambda", &self.lambda)] {
            if grid.points == 0 {
                return bad(format!("{name} grid needs at least one point"));
            }
            if !grid.start.is_finite() || !grid.stop.is_finite() {
                return bad(format!("{name} grid bounds must be finite"));
            }
        }
        if self.integrator_steps < 2 {
            return bad("integrator_steps must be at least 2".into());
        }
        if let Some(w) = &self.schmidt_weights {
            if w.len() != d || w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().all(|x| *x == 0.0) {
                return bad("schmidt_weights must be D nonnegative numbers, not all zero".into());
            }
        }
        if let Conditioning::Weights(w) = &self.conditioning {
            if w.len() != self.d_env() {
                return bad(format!("{} conditioning weights for d_env = {}", w.len(), self.d_env()));
            }
        }
        if self.conditioning == Conditioning::FromSchmidt && self.schmidt_weights.is_none() {
            return bad("from-schmidt conditioning needs schmidt_weights".into());
        }
        if let Some(s) = &self.interaction.shifts {
            if s.len() != self.d_env() {
                return bad(format!("{} interaction shifts for d_env = {}", s.len(), self.d_env()));
            }
        }
        if let Some(b) = &self.interaction.branches {
            if b.is_empty() || b.len() > self.d_env() || b.iter().any(|&k| k >= d) {
                return bad("interaction branches must pick 1..=d_env eigenpair indices below D".into());
            }
        }
        if self.state == StateKind::NonEigenstate && self.d_env() < 2 {
            return bad("the non-eigenstate needs d_env ≥ 2".into());
        }
        for (k, v) in &self.tolerances {
            if v.is_nan() || *v <= 0.0 {
                return bad(format!("tolerance {k} must be positive"));
            }
        }
        Ok(())
    }
}

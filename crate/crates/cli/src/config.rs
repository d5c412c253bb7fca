//! Experiment configuration files.

use std::path::{Path, PathBuf};

use nlsctl_core::{SolverParams, SynthesisParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub half_width: f64,
    pub points: usize,
}

/// One Hermite term `coeff * h_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HermiteTerm {
    pub index: Vec<usize>,
    pub coeff: f64,
}

/// A real target phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhaseSpec {
    Zero,
    /// `sum coeff h_index`.
    Hermite { terms: Vec<HermiteTerm> },
    /// `amplitude * exp(-|x - center|^2 / (2 width^2))`.
    Gaussian { amplitude: f64, center: Vec<f64>, width: f64 },
}

/// An initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    /// A single normalized Hermite function.
    Hermite { index: Vec<usize> },
    /// Normalized Gaussian packet.
    Packet { center: Vec<f64>, width: f64, momentum: Vec<f64> },
    /// Normalized combination of Hermite functions with seeded random
    /// complex coefficients, all axis degrees `<= max_degree`.
    RandomHermite { max_degree: usize },
}

impl Default for StateSpec {
    fn default() -> Self {
        StateSpec::Hermite { index: vec![0] }
    }
}

fn default_state() -> StateSpec {
    StateSpec::default()
}

fn default_t_points() -> usize {
    10
}

fn default_rungs() -> usize {
    4
}

fn default_margin() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    ConjugationLimit {
        phase: PhaseSpec,
        #[serde(default = "default_state")]
        state: StateSpec,
        /// Momentum direction, `1..=N`.
        axis: usize,
        taus: Vec<f64>,
    },
    ImpulseLimit {
        #[serde(default = "default_state")]
        state: StateSpec,
        /// `0` for the `h0` potential, `1..=N` for momentum.
        direction: usize,
        amplitude: f64,
        deltas: Vec<f64>,
        /// Points of the `t`-grid in `(0, 1)` for the sup column.
        #[serde(default = "default_t_points")]
        t_points: usize,
    },
    Steer {
        phase: PhaseSpec,
        #[serde(default = "default_state")]
        state: StateSpec,
        #[serde(default = "default_rungs")]
        rungs: usize,
    },
    EnergyShift {
        region_lo: Vec<f64>,
        region_hi: Vec<f64>,
        xi: Vec<f64>,
        nu: Vec<f64>,
        #[serde(default = "default_margin")]
        margin: f64,
        #[serde(default = "default_rungs")]
        rungs: usize,
    },
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::ConjugationLimit { .. } => "conjugation-limit",
            Experiment::ImpulseLimit { .. } => "impulse-limit",
            Experiment::Steer { .. } => "steer",
            Experiment::EnergyShift { .. } => "energy-shift",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub grid: GridSpec,
    pub solver: SolverParams,
    #[serde(default)]
    pub synthesis: Option<SynthesisParams>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub experiment: Experiment,
}

fn strictly_decreasing_positive(name: &str, xs: &[f64]) -> Result<(), CliError> {
    if xs.is_empty() {
        return Err(CliError::Invalid(format!("{name} must not be empty")));
    }
    if xs.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(CliError::Invalid(format!("{name} must be positive")));
    }
    if xs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CliError::Invalid(format!("{name} must be strictly decreasing")));
    }
    Ok(())
}

fn check_len(name: &str, v: &[f64], dim: usize) -> Result<(), CliError> {
    if v.len() != dim {
        return Err(CliError::Invalid(format!("{name} has {} entries, grid has dimension {dim}", v.len())));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: ExperimentConfig =
            serde_path_to_error::deserialize(de).map_err(|e| CliError::Schema(format!("{}: {}", e.path(), e.inner())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Schema(format!(
                "schema_version: expected {SCHEMA_VERSION}, found {}",
                self.schema_version
            )));
        }
        self.solver.validate()?;
        if let Some(s) = &self.synthesis {
            s.validate()?;
        }
        let dim = self.grid.dim;
        match &self.experiment {
            Experiment::ConjugationLimit { axis, taus, .. } => {
                strictly_decreasing_positive("taus", taus)?;
                if *axis == 0 || *axis > dim {
                    return Err(CliError::Invalid(format!("axis {axis} outside 1..={dim}")));
                }
            }
            Experiment::ImpulseLimit { direction, deltas, t_points, amplitude, .. } => {
                strictly_decreasing_positive("deltas", deltas)?;
                if *direction > dim {
                    return Err(CliError::Invalid(format!("direction {direction} outside 0..={dim}")));
                }
                if *t_points == 0 || !amplitude.is_finite() {
                    return Err(CliError::Invalid("t_points must be positive and amplitude finite".into()));
                }
            }
            Experiment::Steer { rungs, .. } => {
                self.require_synthesis()?;
                if *rungs == 0 {
                    return Err(CliError::Invalid("rungs must be positive".into()));
                }
            }
            Experiment::EnergyShift { region_lo, region_hi, xi, nu, margin, rungs } => {
                self.require_synthesis()?;
                for (name, v) in [("region_lo", region_lo), ("region_hi", region_hi), ("xi", xi), ("nu", nu)] {
                    check_len(name, v, dim)?;
                }
                if region_lo.iter().zip(region_hi).any(|(a, b)| !(a < b)) {
                    return Err(CliError::Invalid("region_lo must lie below region_hi".into()));
                }
                if !(*margin > 0.0) || *rungs == 0 {
                    return Err(CliError::Invalid("margin and rungs must be positive".into()));
                }
            }
        }
        Ok(())
    }

    pub fn require_synthesis(&self) -> Result<&SynthesisParams, CliError> {
        self.synthesis
            .as_ref()
            .ok_or_else(|| CliError::Schema(format!("synthesis: required by {}", self.experiment.name())))
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text)
}

//! Checked-in acceptance thresholds (`acceptance.toml`).

use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::path::Path;

const CHECKED_IN: &str = include_str!("../../acceptance.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelThresholds {
    pub epsilon: f64,
    pub mass_times: Vec<f64>,
    pub mass_rel_tol: f64,
    pub shell_abs_tol: f64,
    pub mc_points: usize,
    pub mc_rel_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquivalenceThresholds {
    pub slope_min: f64,
    pub slope_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DobrushinThresholds {
    pub bound_slack: f64,
    pub shrink_min: f64,
    pub shrink_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanfieldThresholds {
    pub bound_slack: f64,
    pub field_bound_slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyThresholds {
    pub static_drift_max: f64,
    pub drift_max: f64,
    pub drift_improvement_min: f64,
    pub exchange_order_min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeThresholds {
    pub residual_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportThresholds {
    pub instances: usize,
    pub max_atoms: usize,
    pub brute_force_tol: f64,
    pub triples: usize,
    pub metric_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleThresholds {
    pub n: usize,
    pub t_end: f64,
    pub picard_factor: f64,
    pub windowed_tol: f64,
}

/// Every registered pass/fail threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub kernels: KernelThresholds,
    pub equivalence: EquivalenceThresholds,
    pub dobrushin: DobrushinThresholds,
    pub meanfield: MeanfieldThresholds,
    pub energy: EnergyThresholds,
    pub gauge: GaugeThresholds,
    pub transport: TransportThresholds,
    pub oracle: OracleThresholds,
}

impl Manifest {
    /// The manifest compiled into the crate.
    pub fn checked_in() -> Self {
        Self::from_toml_str(CHECKED_IN).expect("checked-in acceptance manifest parses")
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        Ok(toml::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

//! Experiment configurations (TOML, every field defaulted).

use crate::dynamics::SimConfig;
use crate::error::Result;
use crate::kernels::{build_kernel_tables, build_mollifier, build_single_kernel_tables, ChiFamily, RadialKernel};
use crate::Exec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Physical and numerical scales shared by all experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scales {
    pub epsilon: f64,
    pub t_end: f64,
    pub dt: f64,
    pub x_radius: f64,
    pub xi_radius: f64,
    pub family: ChiFamily,
    /// Kernel table spacings are `epsilon / kernel_resolution`.
    pub kernel_resolution: f64,
    pub exec: Exec,
}

impl Default for Scales {
    fn default() -> Self {
        Scales {
            epsilon: 0.2,
            t_end: 1.0,
            dt: 0.05,
            x_radius: 1.0,
            xi_radius: 0.5,
            family: ChiFamily::Bump,
            kernel_resolution: 8.0,
            exec: Exec::Parallel,
        }
    }
}

impl Scales {
    /// Force kernel covering `[0, t_end]` at `resolution` (defaults to the
    /// configured one).
    pub fn kernel(&self, resolution: Option<f64>) -> Result<RadialKernel> {
        let p = build_mollifier(self.epsilon, self.family)?;
        let h = self.epsilon / resolution.unwrap_or(self.kernel_resolution);
        build_kernel_tables(&p, self.t_end, h, h)
    }

    /// Once-mollified kernel for the tilde fields.
    pub fn single_kernel(&self, resolution: Option<f64>) -> Result<RadialKernel> {
        let p = build_mollifier(self.epsilon, self.family)?;
        let h = self.epsilon / resolution.unwrap_or(self.kernel_resolution);
        build_single_kernel_tables(&p, self.t_end, h, h)
    }

    pub fn sim(&self, n: usize, dt: f64) -> SimConfig {
        let mut c = SimConfig::new(self.epsilon, dt, self.t_end, n);
        c.exec = self.exec;
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquivalenceConfig {
    pub scales: Scales,
    pub n_list: Vec<usize>,
    pub seed: u64,
    /// Confidence level of the slope interval.
    pub confidence: f64,
}

impl Default for EquivalenceConfig {
    fn default() -> Self {
        EquivalenceConfig {
            scales: Scales::default(),
            n_list: vec![8, 16, 32, 64, 128],
            seed: 1,
            confidence: 0.95,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DobrushinConfig {
    pub scales: Scales,
    pub n: usize,
    pub seed: u64,
    /// Displacement sizes in phase space; the first is the baseline of the
    /// shrink ratio.
    pub perturbations: Vec<f64>,
    pub perturbation_seed: u64,
    /// Distances are measured every `sample_every` steps.
    pub sample_every: usize,
    pub budget: usize,
}

impl Default for DobrushinConfig {
    fn default() -> Self {
        DobrushinConfig {
            scales: Scales::default(),
            n: 64,
            seed: 3,
            perturbations: vec![1e-2, 1e-3],
            perturbation_seed: 11,
            sample_every: 2,
            budget: 2048,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeanfieldConfig {
    pub scales: Scales,
    pub n_list: Vec<usize>,
    /// Reference sample size; 4x the largest ladder point when absent.
    pub n_ref: Option<usize>,
    pub ref_seed: u64,
    /// Seed of the ladder draw; ladder ensembles are nested prefixes.
    pub ladder_seed: u64,
    pub sample_every: usize,
    /// Probe grid: `probe_points^3` nodes on `[-probe_half_width, probe_half_width]^3`.
    pub probe_points: usize,
    pub probe_half_width: f64,
    pub budget: usize,
    /// Reruns the reference sample through the particle solver.
    pub identical_check: bool,
    /// Prefix sizes `[a, b]` of the reference sample for the proxy refinement
    /// check `d(b, ref) < d(a, b)`; empty to skip.
    pub proxy_sizes: Vec<usize>,
}

impl Default for MeanfieldConfig {
    fn default() -> Self {
        MeanfieldConfig {
            scales: Scales::default(),
            n_list: vec![32, 64, 128, 256],
            n_ref: Some(1024),
            ref_seed: 100,
            ladder_seed: 200,
            sample_every: 4,
            probe_points: 5,
            probe_half_width: 1.2,
            budget: 2048,
            identical_check: true,
            proxy_sizes: vec![256, 512],
        }
    }
}

impl MeanfieldConfig {
    pub fn n_ref(&self) -> usize {
        self.n_ref
            .unwrap_or_else(|| 4 * self.n_list.iter().copied().max().unwrap_or(0))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaugeConfig {
    pub n: usize,
    pub seed: u64,
    pub x_radius: f64,
    pub xi_radius: f64,
    pub t: f64,
    pub t_end: f64,
    pub half_width: f64,
    /// Reference `dt = epsilon * dt_factor`, `h = epsilon * h_factor`.
    pub dt_factor: f64,
    pub h_factor: f64,
    pub levels: usize,
}

impl Default for GaugeConfig {
    fn default() -> Self {
        GaugeConfig {
            n: 8,
            seed: 41,
            x_radius: 0.5,
            xi_radius: 0.5,
            t: 0.2,
            t_end: 0.3,
            half_width: 0.8,
            dt_factor: 0.125,
            h_factor: 0.25,
            levels: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    pub scales: Scales,
    pub n: usize,
    pub seed: u64,
    /// Lattice spacing `h = epsilon * h_factor` at the reference level.
    pub h_factor: f64,
    /// Level `l` uses `dt / 2^l`, `h / 2^l` and table resolution `* 2^l`.
    pub levels: usize,
    pub sample_dt: f64,
    pub exchange_times: Vec<f64>,
    /// Frozen charges `[x1, x2, x3, xi1, xi2, xi3]`; momenta must vanish.
    pub static_pair: Vec<[f64; 6]>,
    pub gauge: GaugeConfig,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig {
            scales: Scales {
                dt: 0.01,
                ..Scales::default()
            },
            n: 8,
            seed: 7,
            h_factor: 0.5,
            levels: 2,
            sample_dt: 0.1,
            exchange_times: vec![0.3, 0.6, 0.9],
            static_pair: vec![[-0.2, 0.0, 0.0, 0.0, 0.0, 0.0], [0.2, 0.0, 0.0, 0.0, 0.0, 0.0]],
            gauge: GaugeConfig::default(),
        }
    }
}

/// Parses a TOML config.
pub fn from_toml_str<C: DeserializeOwned>(s: &str) -> Result<C> {
    Ok(toml::from_str(s)?)
}

pub fn load<C: DeserializeOwned>(path: &Path) -> Result<C> {
    from_toml_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c: MeanfieldConfig = from_toml_str("").unwrap();
        assert_eq!(c, MeanfieldConfig::default());
        assert_eq!(c.n_ref(), 1024);
    }

    #[test]
    fn reference_size_defaults_to_four_times_the_ladder() {
        let c: MeanfieldConfig = from_toml_str("n_list = [4, 10]\nn_ref = 0\n").unwrap();
        assert_eq!(c.n_ref(), 0);
        let c = MeanfieldConfig {
            n_ref: None,
            n_list: vec![4, 10],
            ..Default::default()
        };
        assert_eq!(c.n_ref(), 40);
    }

    #[test]
    fn nested_scales_and_typos() {
        let c: EnergyConfig = from_toml_str("[scales]\ndt = 0.02\n[gauge]\nlevels = 3\n").unwrap();
        assert_eq!(c.scales.dt, 0.02);
        assert_eq!(c.scales.epsilon, 0.2);
        assert_eq!(c.gauge.levels, 3);
        assert!(from_toml_str::<EnergyConfig>("dtt = 1\n").is_err());
        assert!(from_toml_str::<EnergyConfig>("[scales]\nexec = \"sequential\"\n").is_ok());
    }
}

//! Simulation configuration, read from sectioned TOML.
//!
//! ```toml
//! [simulation]
//! epsilon = 0.2
//! dt = 0.05
//! t_end = 1.0
//! n_particles = 16
//! self_interaction = true
//! force_path = "windowed"
//! seed = 7
//!
//! [initial]
//! kind = "cloud"
//! x_radius = 1.0
//! xi_radius = 0.5
//!
//! [kernel]
//! family = "bump"
//! ```

use super::force::PairRule;
use super::{sample_cloud, PhaseEnsemble, PhasePoint};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::kernels::{build_mollifier, ChiFamily, RadialKernel};
use crate::vec3::Vec3;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForcePath {
    /// Full-history quadrature for every pair.
    Brute,
    /// Only segments inside the retarded window.
    #[default]
    Windowed,
}

/// Initial ensemble descriptor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InitialCondition {
    /// i.i.d. uniform draws on `B(0, x_radius) x B(0, xi_radius)`.
    Cloud {
        #[serde(default = "one")]
        x_radius: f64,
        #[serde(default = "half")]
        xi_radius: f64,
    },
    /// Explicit rows `[x1, x2, x3, xi1, xi2, xi3]` with uniform weights.
    Points { points: Vec<[f64; 6]> },
    /// Ensemble file (CSV `x1,x2,x3,xi1,xi2,xi3[,w]`).
    File { path: PathBuf },
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn yes() -> bool {
    true
}
fn eight() -> f64 {
    8.0
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::Cloud {
            x_radius: 1.0,
            xi_radius: 0.5,
        }
    }
}

/// Kernel table parameters used when a command builds its own kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(default)]
    pub family: ChiFamily,
    /// Table horizon; defaults to the run length.
    #[serde(default)]
    pub t_max: Option<f64>,
    /// Spacings are `eps / resolution` in both `t` and `r`.
    #[serde(default = "eight")]
    pub resolution: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec {
            family: ChiFamily::Bump,
            t_max: None,
            resolution: 8.0,
        }
    }
}

/// Parameters of one particle run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub epsilon: f64,
    pub dt: f64,
    pub t_end: f64,
    pub n_particles: usize,
    #[serde(default = "yes")]
    pub self_interaction: bool,
    #[serde(default)]
    pub force_path: ForcePath,
    #[serde(default)]
    pub seed: u64,
    #[serde(skip)]
    pub initial: InitialCondition,
    #[serde(skip)]
    pub kernel: KernelSpec,
    #[serde(default)]
    pub exec: Exec,
}

#[derive(Deserialize, Serialize)]
struct ConfigFile {
    simulation: SimConfig,
    #[serde(default)]
    initial: InitialCondition,
    #[serde(default)]
    kernel: KernelSpec,
}

impl SimConfig {
    pub fn new(epsilon: f64, dt: f64, t_end: f64, n_particles: usize) -> Self {
        SimConfig {
            epsilon,
            dt,
            t_end,
            n_particles,
            self_interaction: true,
            force_path: ForcePath::Windowed,
            seed: 0,
            initial: InitialCondition::default(),
            kernel: KernelSpec::default(),
            exec: Exec::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let f: ConfigFile = toml::from_str(s)?;
        let mut c = f.simulation;
        c.initial = f.initial;
        c.kernel = f.kernel;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        let f = ConfigFile {
            simulation: self.clone(),
            initial: self.initial.clone(),
            kernel: self.kernel.clone(),
        };
        toml::to_string(&f).expect("config serializes")
    }

    /// Number of steps; `t_end` must be an integer multiple of `dt`.
    pub fn n_steps(&self) -> Result<usize> {
        let n = (self.t_end / self.dt).round();
        if (n * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(self.dt) {
            return Err(Error::Config(format!(
                "t_end = {} is not a multiple of dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(n as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::NonPositiveEpsilon(self.epsilon));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.dt > 0.25 * self.epsilon * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "dt = {} does not resolve the kernel shell (needs dt <= eps/4 = {})",
                self.dt,
                0.25 * self.epsilon
            )));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::Config(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        self.n_steps()?;
        Ok(())
    }

    /// Checks that the kernel matches `epsilon` and covers `t_end`.
    pub fn check_kernel(&self, kernel: &RadialKernel) -> Result<()> {
        if (kernel.epsilon - self.epsilon).abs() > 1e-12 * self.epsilon {
            return Err(Error::Config(format!(
                "kernel eps = {} differs from configured eps = {}",
                kernel.epsilon, self.epsilon
            )));
        }
        if self.t_end > kernel.t_max() * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "t_end = {} exceeds kernel t_max = {}",
                self.t_end,
                kernel.t_max()
            )));
        }
        Ok(())
    }

    pub(crate) fn pair_rule(&self) -> PairRule {
        PairRule {
            self_interaction: self.self_interaction,
            windowed: self.force_path == ForcePath::Windowed,
        }
    }

    /// Builds the force kernel described by the `[kernel]` section.
    pub fn build_kernel(&self) -> Result<RadialKernel> {
        let profile = build_mollifier(self.epsilon, self.kernel.family)?;
        let t_max = self.kernel.t_max.unwrap_or(self.t_end).max(self.dt);
        let h = self.epsilon / self.kernel.resolution;
        RadialKernel::build(
            &profile,
            crate::kernels::KernelFamily::Double,
            t_max,
            h,
            h,
        )
    }

    /// Initial ensemble from the `[initial]` section.
    pub fn initial_ensemble(&self) -> Result<PhaseEnsemble> {
        let e = match &self.initial {
            InitialCondition::Cloud {
                x_radius,
                xi_radius,
            } => sample_cloud(self.n_particles, *x_radius, *xi_radius, self.seed),
            InitialCondition::Points { points } => PhaseEnsemble::uniform(
                points
                    .iter()
                    .map(|r| {
                        PhasePoint::new(Vec3::new(r[0], r[1], r[2]), Vec3::new(r[3], r[4], r[5]))
                    })
                    .collect(),
            ),
            InitialCondition::File { path } => super::io::read_ensemble_csv(path)?,
        };
        e.validate()?;
        Ok(e)
    }
}

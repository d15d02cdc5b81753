//! The regularized N-particle delay system.
//!
//! Particle `i` moves by `x_i' = v(xi_i)`, `xi_i' = F_i` where `F_i` sums,
//! over sources `j`, the initial-layer force `m2(t, x_i(t) - x_j(0))` and the
//! retarded electric and magnetic memory integrals of `Y_eps` along the
//! past trajectory of `j`. Because `Y_eps(t - s, .)` lives on a thin shell
//! around the backward light cone, each pair integral only touches the
//! retarded window where `|(t - s) - |x_i(t) - x_j(s)|| < 2 eps`.

pub mod config;
pub mod force;
pub mod history;
pub mod integrator;
pub mod io;
pub(crate) mod memory;

pub use config::{ForcePath, InitialCondition, SimConfig};
pub use force::{force_on_particle, forces_at_node};
pub use history::{NodeState, TrajectoryHistory};
pub use integrator::{simulate, simulate_weighted, step};
pub use io::{load_ensemble, read_ensemble_csv, write_ensemble_csv};

use crate::error::{Error, Result};
use crate::vec3::Vec3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitBall};
use serde::{Deserialize, Serialize};

/// Relativistic velocity, energy and velocity Jacobian of a momentum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kinematics {
    pub v: Vec3,
    pub e: f64,
    /// `(I - v v^T) / e`, row-major.
    pub dv: [[f64; 3]; 3],
}

/// `v = xi / e`, `e = sqrt(1 + |xi|^2)`, `dv = (I - v v^T) / e`.
pub fn kinematics(xi: Vec3) -> Kinematics {
    let e = (1.0 + xi.norm2()).sqrt();
    let v = xi / e;
    let mut dv = [[0.0; 3]; 3];
    for (a, row) in dv.iter_mut().enumerate() {
        for (b, c) in row.iter_mut().enumerate() {
            let id = if a == b { 1.0 } else { 0.0 };
            *c = (id - v[a] * v[b]) / e;
        }
    }
    Kinematics { v, e, dv }
}

/// Velocity `v(xi)` alone.
#[inline]
pub fn velocity(xi: Vec3) -> Vec3 {
    xi / (1.0 + xi.norm2()).sqrt()
}

/// Energy `e(xi)`.
#[inline]
pub fn energy(xi: Vec3) -> f64 {
    (1.0 + xi.norm2()).sqrt()
}

/// A point of phase space.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: Vec3,
    pub xi: Vec3,
}

impl PhasePoint {
    pub fn new(x: Vec3, xi: Vec3) -> Self {
        PhasePoint { x, xi }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.xi.is_finite()
    }

    /// Euclidean distance in `R^6`.
    pub fn dist(&self, o: &PhasePoint) -> f64 {
        ((self.x - o.x).norm2() + (self.xi - o.xi).norm2()).sqrt()
    }
}

/// Weighted point cloud in phase space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseEnsemble {
    pub points: Vec<PhasePoint>,
    pub weights: Vec<f64>,
}

impl PhaseEnsemble {
    /// Empirical measure with weights `1 / N`.
    pub fn uniform(points: Vec<PhasePoint>) -> Self {
        let n = points.len();
        let w = if n == 0 { 0.0 } else { 1.0 / n as f64 };
        PhaseEnsemble {
            weights: vec![w; n],
            points,
        }
    }

    pub fn weighted(points: Vec<PhasePoint>, weights: Vec<f64>) -> Result<Self> {
        let e = PhaseEnsemble { points, weights };
        e.validate()?;
        Ok(e)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Checks lengths, finiteness, nonnegativity and unit total weight.
    pub fn validate(&self) -> Result<()> {
        if self.points.len() != self.weights.len() {
            return Err(Error::InvalidParameter(format!(
                "{} points but {} weights",
                self.points.len(),
                self.weights.len()
            )));
        }
        for (i, p) in self.points.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFinite(i));
            }
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidParameter("negative weight".into()));
        }
        let s: f64 = self.weights.iter().sum();
        if !self.points.is_empty() && (s - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(s));
        }
        Ok(())
    }

    /// True when every weight equals `1 / N` exactly.
    pub fn is_uniform(&self) -> bool {
        let n = self.len();
        n > 0 && self.weights.iter().all(|&w| w == 1.0 / n as f64)
    }

    /// Rigid translation of every position.
    pub fn translated(&self, shift: Vec3) -> Self {
        let mut e = self.clone();
        e.points.iter_mut().for_each(|p| p.x += shift);
        e
    }

    /// Position marginal embedded with zero momentum.
    pub fn positions(&self) -> Vec<Vec3> {
        self.points.iter().map(|p| p.x).collect()
    }
}

/// `n` i.i.d. draws from the uniform product density on
/// `B(0, x_radius) x B(0, xi_radius)`.
pub fn sample_cloud(n: usize, x_radius: f64, xi_radius: f64, seed: u64) -> PhaseEnsemble {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| {
            let x: [f64; 3] = UnitBall.sample(&mut rng);
            let xi: [f64; 3] = UnitBall.sample(&mut rng);
            PhasePoint::new(Vec3(x) * x_radius, Vec3(xi) * xi_radius)
        })
        .collect();
    PhaseEnsemble::uniform(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::approx_constant)]
    fn kinematics_rest_and_unit_momentum() {
        let k = kinematics(Vec3::ZERO);
        assert_eq!(k.v, Vec3::ZERO);
        assert_eq!(k.e, 1.0);
        assert_eq!(k.dv, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let k = kinematics(Vec3::new(1.0, 0.0, 0.0));
        assert!((k.v[0] - 0.707_106_8).abs() < 1e-7);
        assert!((k.e - 1.414_213_6).abs() < 1e-7);
    }

    #[test]
    fn sampling_is_seeded_and_bounded() {
        let a = sample_cloud(50, 1.0, 0.5, 3);
        let b = sample_cloud(50, 1.0, 0.5, 3);
        assert_eq!(a, b);
        assert!(a.points.iter().all(|p| p.x.norm() <= 1.0 && p.xi.norm() <= 0.5));
        a.validate().unwrap();
        assert!(a.is_uniform());
    }
}

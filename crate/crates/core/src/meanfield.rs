//! Mean-field characteristic flows on weighted samples.
//!
//! [`reference_flow`] runs the particle integrator with arbitrary weights
//! (self-interaction on), which is the characteristic flow of the mean-field
//! equation for the weighted sample. [`picard_solve`] computes the same flow
//! independently as the fixed point of
//! `Z^{n+1}(t, z) = z + int_0^t K(Z^n)(tau, Z^n(tau, z)) dtau`
//! on full trajectories stored on the shared time grid.

use crate::dynamics::force::{target_force, Frame, PairRule};
use crate::dynamics::{simulate_weighted, velocity, NodeState, PhaseEnsemble, SimConfig, TrajectoryHistory};
use crate::error::{Error, Result};
use crate::kernels::RadialKernel;
use crate::vec3::Vec3;
use serde::{Deserialize, Serialize};

/// Sampled characteristic map with constant weights.
#[derive(Clone, Debug)]
pub struct FlowSolution {
    pub history: TrajectoryHistory,
    /// Picard diagnostics; empty for the time-stepped flow.
    pub report: Option<PicardReport>,
}

impl FlowSolution {
    pub fn weights(&self) -> &[f64] {
        self.history.weights()
    }

    pub fn terminal(&self) -> PhaseEnsemble {
        self.history.ensemble_at(self.history.steps())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardReport {
    /// Number of map applications before the residual fell below `tol`.
    pub iterations: usize,
    /// `sup |Z^{n+1} - Z^n|` over nodes and samples, one per application.
    pub residuals: Vec<f64>,
    pub converged: bool,
    /// First index from which residuals contract by a factor below one.
    pub contraction_from: Option<usize>,
}

/// Time-stepped mean-field flow of a weighted ensemble.
pub fn reference_flow(
    initial: &PhaseEnsemble,
    kernel: &RadialKernel,
    config: &SimConfig,
) -> Result<FlowSolution> {
    let mut c = config.clone();
    c.self_interaction = true;
    Ok(FlowSolution {
        history: simulate_weighted(&c, kernel, initial)?,
        report: None,
    })
}

/// Cumulative integral of node values `f_0..f_K` (spacing `h`) with local
/// cubic interpolation; exact for cubic polynomials.
fn cumulative(f: &[Vec3], h: f64) -> Vec<Vec3> {
    let k = f.len();
    let mut out = vec![Vec3::ZERO; k];
    if k < 2 {
        return out;
    }
    for m in 0..k - 1 {
        let inc = if k < 4 {
            if k == 3 {
                // quadratic through the three nodes
                let (a, b, c) = (f[0], f[1], f[2]);
                if m == 0 {
                    (a * 5.0 + b * 8.0 - c) * (h / 12.0)
                } else {
                    (c * 5.0 + b * 8.0 - a) * (h / 12.0)
                }
            } else {
                (f[0] + f[1]) * (0.5 * h)
            }
        } else {
            // four-node stencil containing [m, m+1]
            let s = m.saturating_sub(1).min(k - 4);
            let p = [f[s], f[s + 1], f[s + 2], f[s + 3]];
            let w: [f64; 4] = match m - s {
                0 => [9.0, 19.0, -5.0, 1.0],
                1 => [-1.0, 13.0, 13.0, -1.0],
                _ => [1.0, -5.0, 19.0, 9.0],
            };
            (p[0] * w[0] + p[1] * w[1] + p[2] * w[2] + p[3] * w[3]) * (h / 24.0)
        };
        out[m + 1] = out[m] + inc;
    }
    out
}

/// Independent fixed-point solver for the sampled flow.
///
/// Returns the last iterate; when `max_iter` is exhausted the report carries
/// `converged = false` with the final residual.
pub fn picard_solve(
    initial: &PhaseEnsemble,
    kernel: &RadialKernel,
    config: &SimConfig,
    max_iter: usize,
    tol: f64,
) -> Result<FlowSolution> {
    config.validate()?;
    config.check_kernel(kernel)?;
    initial.validate()?;
    let steps = config.n_steps()?;
    let dt = config.dt;
    let n = initial.len();
    let rule = PairRule {
        self_interaction: true,
        windowed: config.pair_rule().windowed,
    };
    // Z^0: constant trajectories
    let z0: Vec<NodeState> = initial
        .points
        .iter()
        .map(|p| NodeState::new(p.x, p.xi, Vec3::ZERO, Vec3::ZERO))
        .collect();
    let mut iterate = TrajectoryHistory::new(dt, initial.weights.clone(), z0.clone())?;
    for _ in 0..steps {
        iterate.push(z0.clone())?;
    }
    let mut residuals = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter.max(1) {
        // node velocity field K(Z^n) at every (node, sample)
        let field: Vec<Vec<(Vec3, Vec3)>> = config.exec.map(n, |i| {
            (0..=steps)
                .map(|k| {
                    let s = iterate.node(k, i);
                    let frame = Frame::at_node(&iterate, k);
                    let f = target_force(kernel, &frame, iterate.weights(), i, s, rule);
                    (velocity(s.xi), f)
                })
                .collect()
        });
        let mut next: Vec<Vec<NodeState>> = vec![Vec::with_capacity(n); steps + 1];
        for (i, fi) in field.iter().enumerate() {
            let xs: Vec<Vec3> = fi.iter().map(|p| p.0).collect();
            let fs: Vec<Vec3> = fi.iter().map(|p| p.1).collect();
            let dx = cumulative(&xs, dt);
            let dxi = cumulative(&fs, dt);
            let p = initial.points[i];
            for k in 0..=steps {
                next[k].push(NodeState::new(p.x + dx[k], p.xi + dxi[k], xs[k], fs[k]));
            }
        }
        let mut res: f64 = 0.0;
        for (k, states) in next.iter().enumerate() {
            for (i, s) in states.iter().enumerate() {
                let o = iterate.node(k, i);
                res = res.max((s.x - o.x).max_abs()).max((s.xi - o.xi).max_abs());
            }
        }
        let mut it = next.into_iter();
        let mut h = TrajectoryHistory::new(dt, initial.weights.clone(), it.next().unwrap())?;
        for states in it {
            h.push(states)?;
        }
        iterate = h;
        residuals.push(res);
        if !res.is_finite() {
            return Err(Error::InvalidParameter("Picard iteration diverged".into()));
        }
        if res <= tol {
            converged = true;
            break;
        }
    }
    let contraction_from = (0..residuals.len())
        .find(|&s| residuals[s..].windows(2).all(|w| w[1] < w[0] || w[1] <= tol));
    let iterations = if converged {
        residuals.len().saturating_sub(1)
    } else {
        residuals.len()
    };
    Ok(FlowSolution {
        history: iterate,
        report: Some(PicardReport {
            iterations,
            residuals,
            converged,
            contraction_from,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cumulative_exact_for_cubics() {
        let h = 0.1;
        let f: Vec<Vec3> = (0..9)
            .map(|k| {
                let t = k as f64 * h;
                Vec3::new(t * t * t - t, 1.0, 2.0 * t)
            })
            .collect();
        let c = cumulative(&f, h);
        for (k, v) in c.iter().enumerate() {
            let t = k as f64 * h;
            assert!((v[0] - (t.powi(4) / 4.0 - t * t / 2.0)).abs() < 1e-14);
            assert!((v[1] - t).abs() < 1e-14);
            assert!((v[2] - t * t).abs() < 1e-14);
        }
    }
}

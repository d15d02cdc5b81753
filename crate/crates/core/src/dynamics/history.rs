//! Append-only trajectory storage with cubic Hermite interpolation.

use super::velocity;
use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Phase state at one time node together with its time derivatives.
///
/// `vel` is `v(xi)`, which for particle trajectories equals `xdot`; Picard
/// iterates keep them distinct.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NodeState {
    pub x: Vec3,
    pub xi: Vec3,
    pub xdot: Vec3,
    pub xidot: Vec3,
    pub vel: Vec3,
}

impl NodeState {
    pub fn new(x: Vec3, xi: Vec3, xdot: Vec3, xidot: Vec3) -> Self {
        NodeState {
            x,
            xi,
            xdot,
            xidot,
            vel: velocity(xi),
        }
    }

    /// Cubic Hermite interpolation between `a` (at 0) and `b` (at `h`).
    #[inline]
    pub fn hermite(a: &NodeState, b: &NodeState, h: f64, theta: f64) -> NodeState {
        let t2 = theta * theta;
        let t3 = t2 * theta;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = (t3 - 2.0 * t2 + theta) * h;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = (t3 - t2) * h;
        let d00 = (6.0 * t2 - 6.0 * theta) / h;
        let d10 = 3.0 * t2 - 4.0 * theta + 1.0;
        let d01 = -d00;
        let d11 = 3.0 * t2 - 2.0 * theta;
        let x = a.x * h00 + a.xdot * h10 + b.x * h01 + b.xdot * h11;
        let xi = a.xi * h00 + a.xidot * h10 + b.xi * h01 + b.xidot * h11;
        let xdot = a.x * d00 + a.xdot * d10 + b.x * d01 + b.xdot * d11;
        let xidot = a.xi * d00 + a.xidot * d10 + b.xi * d01 + b.xidot * d11;
        NodeState::new(x, xi, xdot, xidot)
    }

    /// Hermite value at the segment midpoint (cheaper special case).
    #[inline]
    pub fn midpoint(a: &NodeState, b: &NodeState, h: f64) -> (Vec3, Vec3) {
        let x = (a.x + b.x) * 0.5 + (a.xdot - b.xdot) * (h / 8.0);
        let xi = (a.xi + b.xi) * 0.5 + (a.xidot - b.xidot) * (h / 8.0);
        (x, xi)
    }
}

/// Per-particle time series on the uniform grid `k * dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryHistory {
    pub dt: f64,
    n: usize,
    weights: Vec<f64>,
    nodes: Vec<NodeState>,
    /// Number of time slices, kept separately so empty ensembles have steps.
    slices: usize,
}

impl TrajectoryHistory {
    pub fn new(dt: f64, weights: Vec<f64>, initial: Vec<NodeState>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        if weights.len() != initial.len() {
            return Err(Error::InvalidParameter("weights and states differ in length".into()));
        }
        Ok(TrajectoryHistory {
            dt,
            n: initial.len(),
            weights,
            nodes: initial,
            slices: 1,
        })
    }

    pub fn n_particles(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of completed steps; nodes are `0..=steps()`.
    pub fn steps(&self) -> usize {
        self.slices - 1
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.steps())
    }

    #[inline]
    pub fn node(&self, k: usize, i: usize) -> &NodeState {
        &self.nodes[k * self.n + i]
    }

    pub(crate) fn node_mut(&mut self, k: usize, i: usize) -> &mut NodeState {
        &mut self.nodes[k * self.n + i]
    }

    /// All particle states at node `k`.
    pub fn slice(&self, k: usize) -> &[NodeState] {
        &self.nodes[k * self.n..(k + 1) * self.n]
    }

    pub fn push(&mut self, states: Vec<NodeState>) -> Result<()> {
        if states.len() != self.n {
            return Err(Error::InvalidParameter("wrong number of states".into()));
        }
        for (i, s) in states.iter().enumerate() {
            if !(s.x.is_finite() && s.xi.is_finite()) {
                return Err(Error::NonFinite(i));
            }
        }
        self.nodes.extend(states);
        self.slices += 1;
        Ok(())
    }

    /// Largest node index `k` with `k dt <= t` (clamped to the history).
    pub fn node_floor(&self, t: f64) -> usize {
        let k = (t / self.dt * (1.0 + 1e-12) + 1e-12).floor() as usize;
        k.min(self.steps())
    }

    pub fn check_covers(&self, t: f64) -> Result<()> {
        if !(t >= 0.0) || t > self.t_end() * (1.0 + 1e-12) + 1e-14 {
            return Err(Error::HistoryTooShort {
                requested: t,
                available: self.t_end(),
            });
        }
        Ok(())
    }

    /// Interpolated state of particle `i` at time `t`.
    pub fn state_at(&self, i: usize, t: f64) -> Result<NodeState> {
        self.check_covers(t)?;
        let k = self.node_floor(t);
        let tk = self.time(k);
        if (t - tk).abs() <= 1e-12 * self.dt || k == self.steps() {
            return Ok(*self.node(k, i));
        }
        Ok(NodeState::hermite(
            self.node(k, i),
            self.node(k + 1, i),
            self.dt,
            (t - tk) / self.dt,
        ))
    }

    /// Time series of `(x, xi)` for particle `i`.
    pub fn trajectory(&self, i: usize) -> Vec<(Vec3, Vec3)> {
        (0..=self.steps())
            .map(|k| {
                let s = self.node(k, i);
                (s.x, s.xi)
            })
            .collect()
    }

    /// Phase points at node `k`.
    pub fn points_at(&self, k: usize) -> Vec<super::PhasePoint> {
        self.slice(k)
            .iter()
            .map(|s| super::PhasePoint::new(s.x, s.xi))
            .collect()
    }

    /// Weighted ensemble at node `k`.
    pub fn ensemble_at(&self, k: usize) -> super::PhaseEnsemble {
        super::PhaseEnsemble {
            points: self.points_at(k),
            weights: self.weights.clone(),
        }
    }

    /// Weighted ensemble at an arbitrary time (interpolated).
    pub fn ensemble_at_time(&self, t: f64) -> Result<super::PhaseEnsemble> {
        let points = (0..self.n)
            .map(|i| self.state_at(i, t).map(|s| super::PhasePoint::new(s.x, s.xi)))
            .collect::<Result<Vec<_>>>()?;
        Ok(super::PhaseEnsemble {
            points,
            weights: self.weights.clone(),
        })
    }

    pub(crate) fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }
}

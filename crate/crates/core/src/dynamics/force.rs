//! Pairwise retarded force sweeps.

use super::config::SimConfig;
use super::history::{NodeState, TrajectoryHistory};
use super::memory::{integrate_source, SourcePath};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::kernels::RadialKernel;
use crate::vec3::Vec3;

/// Snapshot of all source paths up to time `t`.
#[derive(Clone, Copy)]
pub(crate) struct Frame<'a> {
    pub hist: &'a TrajectoryHistory,
    pub last: usize,
    pub tail: Option<&'a [NodeState]>,
    pub t: f64,
}

impl<'a> Frame<'a> {
    /// Frame ending exactly at node `k`.
    pub fn at_node(hist: &'a TrajectoryHistory, k: usize) -> Self {
        Frame {
            hist,
            last: k,
            tail: None,
            t: hist.time(k),
        }
    }

    #[inline]
    pub fn path(&self, j: usize) -> SourcePath<'a> {
        SourcePath {
            hist: self.hist,
            j,
            last: self.last,
            tail: self.tail.map(|s| (&s[j], self.t)),
        }
    }
}

/// How the source sum is normalized.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PairRule {
    pub self_interaction: bool,
    pub windowed: bool,
}

/// Lorentz force on a target state from every source of the frame.
#[inline]
pub(crate) fn target_force(
    kernel: &RadialKernel,
    frame: &Frame,
    weights: &[f64],
    i: usize,
    target: &NodeState,
    rule: PairRule,
) -> Vec3 {
    let scale = if rule.self_interaction {
        1.0
    } else {
        1.0 / (1.0 - weights[i])
    };
    let vi = target.vel;
    let t = frame.t;
    let mut total = Vec3::ZERO;
    for (j, &wj) in weights.iter().enumerate() {
        if !rule.self_interaction && j == i {
            continue;
        }
        let mut mem = Vec3::ZERO;
        integrate_source(kernel, target.x, t, &frame.path(j), rule.windowed, |w, k, u| {
            let lorentz = k.grad + u * k.dt + vi.cross(u.cross(k.grad));
            mem += lorentz * w;
        });
        let x0 = frame.hist.node(0, j).x;
        total += (kernel.layer_force(t, target.x - x0) - mem) * (wj * scale);
    }
    total
}

pub(crate) fn sweep(
    kernel: &RadialKernel,
    frame: &Frame,
    targets: &[NodeState],
    rule: PairRule,
    exec: Exec,
) -> Vec<Vec3> {
    let weights = frame.hist.weights();
    exec.map(targets.len(), |i| {
        target_force(kernel, frame, weights, i, &targets[i], rule)
    })
}

fn check_kernel_time(kernel: &RadialKernel, t: f64) -> Result<()> {
    if t > kernel.t_max() * (1.0 + 1e-12) {
        return Err(Error::OutOfRange {
            t,
            t_max: kernel.t_max(),
        });
    }
    Ok(())
}

/// Force on particle `i` at time `t <= t_end` of a recorded history.
///
/// Off-node times use Hermite-interpolated states for the target and as the
/// end point of every source path.
pub fn force_on_particle(
    i: usize,
    t: f64,
    history: &TrajectoryHistory,
    kernel: &RadialKernel,
    config: &SimConfig,
) -> Result<Vec3> {
    history.check_covers(t)?;
    check_kernel_time(kernel, t)?;
    if i >= history.n_particles() {
        return Err(Error::InvalidParameter(format!("no particle {i}")));
    }
    let k = history.node_floor(t);
    let rule = config.pair_rule();
    let weights = history.weights();
    let tail_states;
    let frame = if t - history.time(k) > 1e-12 * history.dt {
        tail_states = (0..history.n_particles())
            .map(|j| history.state_at(j, t))
            .collect::<Result<Vec<_>>>()?;
        Frame {
            hist: history,
            last: k,
            tail: Some(&tail_states),
            t,
        }
    } else {
        Frame::at_node(history, k)
    };
    let target = match frame.tail {
        Some(s) => s[i],
        None => *history.node(k, i),
    };
    if !(target.x.is_finite() && target.xi.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(target_force(kernel, &frame, weights, i, &target, rule))
}

/// Forces on every particle at node `k`.
pub fn forces_at_node(
    history: &TrajectoryHistory,
    k: usize,
    kernel: &RadialKernel,
    config: &SimConfig,
) -> Result<Vec<Vec3>> {
    if k > history.steps() {
        return Err(Error::HistoryTooShort {
            requested: history.time(k),
            available: history.t_end(),
        });
    }
    check_kernel_time(kernel, history.time(k))?;
    let frame = Frame::at_node(history, k);
    Ok(sweep(
        kernel,
        &frame,
        history.slice(k),
        config.pair_rule(),
        config.exec,
    ))
}

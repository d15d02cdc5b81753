//! Classical RK4 for the delay system.
//!
//! Stage forces see the recorded history up to `t_n` plus a tail segment
//! ending at the stage state; the tail's momentum slope is the previous
//! stage slope. A freshly appended node carries the last stage slope as a
//! provisional `xidot`, replaced by the exact force at the start of the
//! next step.

use super::config::SimConfig;
use super::force::{sweep, Frame};
use super::history::{NodeState, TrajectoryHistory};
use super::{velocity, PhaseEnsemble};
use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, RadialKernel};
use crate::vec3::Vec3;

fn initial_history(dt: f64, initial: &PhaseEnsemble) -> Result<TrajectoryHistory> {
    let states = initial
        .points
        .iter()
        .map(|p| NodeState::new(p.x, p.xi, velocity(p.xi), Vec3::ZERO))
        .collect();
    TrajectoryHistory::new(dt, initial.weights.clone(), states)
}

/// Replaces the provisional momentum slope at the last node by the force.
fn finalize_last(
    history: &mut TrajectoryHistory,
    kernel: &RadialKernel,
    config: &SimConfig,
) -> Vec<Vec3> {
    let k = history.steps();
    let f = {
        let frame = Frame::at_node(history, k);
        sweep(kernel, &frame, history.slice(k), config.pair_rule(), config.exec)
    };
    for (i, fi) in f.iter().enumerate() {
        history.node_mut(k, i).xidot = *fi;
    }
    f
}

fn stage_states(base: &[NodeState], xdot: &[Vec3], xidot: &[Vec3], h: f64, slope: &[Vec3]) -> Vec<NodeState> {
    base.iter()
        .enumerate()
        .map(|(i, s)| {
            let xi = s.xi + xidot[i] * h;
            NodeState::new(s.x + xdot[i] * h, xi, velocity(xi), slope[i])
        })
        .collect()
}

/// Advances the history by one RK4 step.
pub fn step(
    history: &mut TrajectoryHistory,
    kernel: &RadialKernel,
    config: &SimConfig,
) -> Result<()> {
    let dt = history.dt;
    let n = history.steps();
    let t = history.time(n);
    if t + dt > kernel.t_max() * (1.0 + 1e-12) {
        return Err(Error::OutOfRange {
            t: t + dt,
            t_max: kernel.t_max(),
        });
    }
    let rule = config.pair_rule();
    let exec = config.exec;
    let f1 = finalize_last(history, kernel, config);
    let base: Vec<NodeState> = history.slice(n).to_vec();
    let v1: Vec<Vec3> = base.iter().map(|s| s.vel).collect();

    let s2 = stage_states(&base, &v1, &f1, 0.5 * dt, &f1);
    fn frame<'a>(hist: &'a TrajectoryHistory, last: usize, tail: &'a [NodeState], t: f64) -> Frame<'a> {
        Frame {
            hist,
            last,
            tail: Some(tail),
            t,
        }
    }
    let history_ro: &TrajectoryHistory = history;
    let f2 = sweep(kernel, &frame(history_ro, n, &s2, t + 0.5 * dt), &s2, rule, exec);
    let v2: Vec<Vec3> = s2.iter().map(|s| s.vel).collect();

    let s3 = stage_states(&base, &v2, &f2, 0.5 * dt, &f2);
    let f3 = sweep(kernel, &frame(history_ro, n, &s3, t + 0.5 * dt), &s3, rule, exec);
    let v3: Vec<Vec3> = s3.iter().map(|s| s.vel).collect();

    let s4 = stage_states(&base, &v3, &f3, dt, &f3);
    let f4 = sweep(kernel, &frame(history_ro, n, &s4, t + dt), &s4, rule, exec);

    let next = base
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let x = s.x + (v1[i] + (v2[i] + v3[i]) * 2.0 + s4[i].vel) * (dt / 6.0);
            let xi = s.xi + (f1[i] + (f2[i] + f3[i]) * 2.0 + f4[i]) * (dt / 6.0);
            NodeState::new(x, xi, velocity(xi), f4[i])
        })
        .collect();
    history.push(next)
}

fn check_inputs(config: &SimConfig, kernel: &RadialKernel, initial: &PhaseEnsemble) -> Result<()> {
    config.validate()?;
    config.check_kernel(kernel)?;
    initial.validate()?;
    if kernel.family != KernelFamily::Double {
        return Err(Error::WrongKernelFamily {
            expected: "double",
            found: kernel.family.name(),
        });
    }
    Ok(())
}

fn run(config: &SimConfig, kernel: &RadialKernel, initial: &PhaseEnsemble) -> Result<TrajectoryHistory> {
    let mut h = initial_history(config.dt, initial)?;
    for _ in 0..config.n_steps()? {
        step(&mut h, kernel, config)?;
    }
    if !initial.is_empty() {
        finalize_last(&mut h, kernel, config);
    }
    Ok(h)
}

/// Empirical N-particle run on `[0, t_end]`.
///
/// In self-interaction mode the ensemble must carry uniform weights.
pub fn simulate(
    config: &SimConfig,
    kernel: &RadialKernel,
    initial: &PhaseEnsemble,
) -> Result<TrajectoryHistory> {
    check_inputs(config, kernel, initial)?;
    if !initial.is_empty() && !initial.is_uniform() {
        return Err(Error::Config(
            "empirical runs need uniform weights; use the mean-field flow".into(),
        ));
    }
    run(config, kernel, initial)
}

/// Same integrator with arbitrary normalized weights.
pub fn simulate_weighted(
    config: &SimConfig,
    kernel: &RadialKernel,
    initial: &PhaseEnsemble,
) -> Result<TrajectoryHistory> {
    check_inputs(config, kernel, initial)?;
    run(config, kernel, initial)
}

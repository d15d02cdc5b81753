//! Potentials and fields reconstructed from particle histories.
//!
//! For sources `j` with weights `w_j`,
//!
//! ```text
//! phi(t, x) = sum_j w_j [ M(t, x - x_j(0)) + int_0^t Y(t - s, x - x_j(s)) ds ]
//! A(t, x)   = sum_j w_j   int_0^t v_j(s) Y(t - s, x - x_j(s)) ds
//! E = -grad phi - d_t A,   B = curl A
//! ```
//!
//! `E` and `B` are assembled directly from the kernel derivatives. With the
//! force kernel (double mollification) `E + v ^ B` is the Lorentz force of
//! the particle system; with the single-mollification kernel the same
//! formulas give the tilde fields entering the pseudo-energy.

pub mod io;

use crate::dynamics::force::Frame;
use crate::dynamics::memory::integrate_source;
use crate::dynamics::{energy, NodeState, TrajectoryHistory};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::kernels::{build_mollifier, KernelFamily, RadialKernel};
use crate::vec3::Vec3;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::f64::consts::PI;

/// Fields and potentials at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub e: Vec3,
    pub b: Vec3,
    pub phi: f64,
    pub a: Vec3,
}

/// Cubic lattice of cell centers `center + (k + 1/2 - n/2) h`, `k < n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub center: Vec3,
    pub half_width: f64,
    pub h: f64,
}

impl GridSpec {
    pub fn new(center: Vec3, half_width: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && half_width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid needs positive spacing and half width, got h={h}, R={half_width}"
            )));
        }
        Ok(GridSpec {
            center,
            half_width,
            h,
        })
    }

    /// Box centered on the initial centroid enclosing `B(c, R + t + 2 eps)`
    /// plus `margin`.
    pub fn auto(history: &TrajectoryHistory, epsilon: f64, t: f64, h: f64, margin: f64) -> Result<Self> {
        let (c, r) = initial_extent(history);
        GridSpec::new(c, r + t + 2.0 * epsilon + margin, h)
    }

    /// Cells per axis.
    pub fn n(&self) -> usize {
        ((2.0 * self.half_width / self.h).round() as usize).max(1)
    }

    #[inline]
    pub fn coord(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.h - 0.5 * self.n() as f64 * self.h
    }

    #[inline]
    pub fn node(&self, ix: usize, iy: usize, iz: usize) -> Vec3 {
        self.center + Vec3::new(self.coord(ix), self.coord(iy), self.coord(iz))
    }

    pub fn nodes(&self) -> Vec<Vec3> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * n * n);
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..n {
                    out.push(self.node(ix, iy, iz));
                }
            }
        }
        out
    }

    /// Checks the containment invariant `half_width >= R + t + 2 eps`.
    pub fn check_contains(&self, history: &TrajectoryHistory, epsilon: f64, t: f64) -> Result<()> {
        let (c, r) = initial_extent(history);
        let required = (c - self.center).norm() + r + t + 2.0 * epsilon;
        if self.half_width < required {
            return Err(Error::BoxTooSmall {
                half_width: self.half_width,
                required,
            });
        }
        Ok(())
    }
}

/// Centroid and radius of the initial positions.
fn initial_extent(history: &TrajectoryHistory) -> (Vec3, f64) {
    let n = history.n_particles();
    if n == 0 {
        return (Vec3::ZERO, 0.0);
    }
    let c = history.slice(0).iter().fold(Vec3::ZERO, |a, s| a + s.x) / n as f64;
    let r = history
        .slice(0)
        .iter()
        .map(|s| (s.x - c).norm())
        .fold(0.0, f64::max);
    (c, r)
}

/// Frame ending at `t`, with interpolated tail states when `t` is off-node.
fn frame_states(history: &TrajectoryHistory, t: f64) -> Result<(usize, Option<Vec<NodeState>>)> {
    history.check_covers(t)?;
    let k = history.node_floor(t);
    if t - history.time(k) > 1e-12 * history.dt {
        let tail = (0..history.n_particles())
            .map(|j| history.state_at(j, t))
            .collect::<Result<Vec<_>>>()?;
        Ok((k, Some(tail)))
    } else {
        Ok((k, None))
    }
}

fn check_time(kernel: &RadialKernel, t: f64) -> Result<()> {
    if !(t >= 0.0) || t > kernel.t_max() * (1.0 + 1e-12) {
        return Err(Error::OutOfRange {
            t,
            t_max: kernel.t_max(),
        });
    }
    Ok(())
}

#[inline]
fn sample_point(kernel: &RadialKernel, frame: &Frame, weights: &[f64], x: Vec3) -> FieldSample {
    let t = frame.t;
    let mut out = FieldSample::default();
    for (j, &wj) in weights.iter().enumerate() {
        let x0 = frame.hist.node(0, j).x;
        let mut e = kernel.layer_force(t, x - x0);
        let mut phi = kernel.layer_potential(t, x - x0);
        let mut b = Vec3::ZERO;
        let mut a = Vec3::ZERO;
        integrate_source(kernel, x, t, &frame.path(j), true, |w, k, u| {
            e -= (k.grad + u * k.dt) * w;
            b -= u.cross(k.grad) * w;
            phi += k.value * w;
            a += u * (k.value * w);
        });
        out.e += e * wj;
        out.b += b * wj;
        out.phi += phi * wj;
        out.a += a * wj;
    }
    out
}

/// `(E, B, phi, A)` at every point, at time `t` of the history.
pub fn field_eval(
    history: &TrajectoryHistory,
    kernel: &RadialKernel,
    t: f64,
    points: &[Vec3],
) -> Result<Vec<FieldSample>> {
    field_eval_with(history, kernel, t, points, Exec::default())
}

pub fn field_eval_with(
    history: &TrajectoryHistory,
    kernel: &RadialKernel,
    t: f64,
    points: &[Vec3],
    exec: Exec,
) -> Result<Vec<FieldSample>> {
    check_time(kernel, t)?;
    let (k, tail) = frame_states(history, t)?;
    let frame = Frame {
        hist: history,
        last: k,
        tail: tail.as_deref(),
        t,
    };
    let weights = history.weights();
    Ok(exec.map(points.len(), |p| sample_point(kernel, &frame, weights, points[p])))
}

/// Fields sampled on a lattice at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldGrid {
    pub spec: GridSpec,
    pub time: f64,
    pub family: KernelFamily,
    /// Row-major in `(ix, iy, iz)`.
    pub samples: Vec<FieldSample>,
}

impl FieldGrid {
    pub fn evaluate(
        history: &TrajectoryHistory,
        kernel: &RadialKernel,
        t: f64,
        spec: GridSpec,
        exec: Exec,
    ) -> Result<Self> {
        let samples = field_eval_with(history, kernel, t, &spec.nodes(), exec)?;
        Ok(FieldGrid {
            spec,
            time: t,
            family: kernel.family,
            samples,
        })
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        let n = self.spec.n();
        (ix * n + iy) * n + iz
    }

    pub fn at(&self, ix: usize, iy: usize, iz: usize) -> &FieldSample {
        &self.samples[self.index(ix, iy, iz)]
    }

    /// `max |div B|` over interior nodes by centered differences.
    pub fn div_b_max(&self) -> f64 {
        let n = self.spec.n();
        let h2 = 2.0 * self.spec.h;
        let mut m: f64 = 0.0;
        for ix in 1..n.saturating_sub(1) {
            for iy in 1..n - 1 {
                for iz in 1..n - 1 {
                    let d = (self.at(ix + 1, iy, iz).b[0] - self.at(ix - 1, iy, iz).b[0]
                        + self.at(ix, iy + 1, iz).b[1]
                        - self.at(ix, iy - 1, iz).b[1]
                        + self.at(ix, iy, iz + 1).b[2]
                        - self.at(ix, iy, iz - 1).b[2])
                        / h2;
                    m = m.max(d.abs());
                }
            }
        }
        m
    }

    pub fn b_max(&self) -> f64 {
        self.samples.iter().map(|s| s.b.norm()).fold(0.0, f64::max)
    }

    pub fn e_max(&self) -> f64 {
        self.samples.iter().map(|s| s.e.norm()).fold(0.0, f64::max)
    }
}

/// Terms of the pseudo-energy `W = sum w_i e(xi_i) + 1/2 int |E~|^2 + |B~|^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoEnergy {
    pub kinetic: f64,
    /// Grid quadrature over the ball of radius `half_width` plus the tail.
    pub field: f64,
    /// Exterior energy of the initial Coulomb field outside the ball.
    pub tail: f64,
    pub total: f64,
}

fn require_family(kernel: &RadialKernel, family: KernelFamily) -> Result<()> {
    if kernel.family != family {
        return Err(Error::WrongKernelFamily {
            expected: family.name(),
            found: kernel.family.name(),
        });
    }
    Ok(())
}

/// `sum_i w_i e(xi_i(t))`.
pub fn kinetic_energy(history: &TrajectoryHistory, t: f64) -> Result<f64> {
    let e = history.ensemble_at_time(t)?;
    Ok(e.points
        .iter()
        .zip(&e.weights)
        .map(|(p, w)| w * energy(p.xi))
        .sum())
}

/// `1/2 int_{|x - c| > l} |grad Phi|^2` for `Phi = sum_j w_j / (4 pi |x - y_j|)`
/// with every `|y_j - c| < l`, by the multipole series
///
/// ```text
/// 1/(8 pi) sum_{j,k} w_j w_k sum_l (l+1)/(2l+1) (r_j r_k)^l / L^(2l+1) P_l(cos g_jk)
/// ```
///
/// (addition theorem; the `l = 0` term is the monopole `Q^2 / (8 pi L)`).
pub fn exterior_coulomb_energy(sources: &[Vec3], weights: &[f64], center: Vec3, l: f64) -> f64 {
    let rel: Vec<Vec3> = sources.iter().map(|&y| y - center).collect();
    let mut total = 0.0;
    for (j, (a, wa)) in rel.iter().zip(weights).enumerate() {
        for (b, wb) in rel[j..].iter().zip(&weights[j..]) {
            let (ra, rb) = (a.norm(), b.norm());
            let q = ra * rb / (l * l);
            let cos = if ra > 0.0 && rb > 0.0 {
                (a.dot(*b) / (ra * rb)).clamp(-1.0, 1.0)
            } else {
                1.0
            };
            // Legendre recurrence; terms are bounded by q^n
            let (mut p0, mut p1) = (1.0, cos);
            let mut sum = 1.0;
            let mut qn = 1.0;
            for n in 1..400 {
                qn *= q;
                if qn < 1e-17 {
                    break;
                }
                let lf = n as f64;
                sum += (lf + 1.0) / (2.0 * lf + 1.0) * qn * p1;
                let p2 = ((2.0 * lf + 1.0) * cos * p1 - lf * p0) / (lf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            let pair = wa * wb * sum / l;
            total += if std::ptr::eq(a, b) { pair } else { 2.0 * pair };
        }
    }
    total / (8.0 * PI)
}

/// Pseudo-energy at time `t` with the single-mollification kernel.
///
/// The field energy uses the midpoint rule over the lattice cells whose
/// centers lie in the ball of radius `half_width` around the box center.
/// Outside that ball the tilde field is still the Coulomb field of the
/// initial charges, whose energy [`exterior_coulomb_energy`] sums exactly.
pub fn pseudo_energy(
    history: &TrajectoryHistory,
    kernel: &RadialKernel,
    t: f64,
    spec: GridSpec,
) -> Result<PseudoEnergy> {
    pseudo_energy_with(history, kernel, t, spec, Exec::default())
}

pub fn pseudo_energy_with(
    history: &TrajectoryHistory,
    kernel: &RadialKernel,
    t: f64,
    spec: GridSpec,
    exec: Exec,
) -> Result<PseudoEnergy> {
    require_family(kernel, KernelFamily::Single)?;
    spec.check_contains(history, kernel.epsilon, t)?;
    let kinetic = kinetic_energy(history, t)?;
    let l = spec.half_width;
    let nodes: Vec<Vec3> = spec
        .nodes()
        .into_iter()
        .filter(|x| (*x - spec.center).norm() <= l)
        .collect();
    let fs = field_eval_with(history, kernel, t, &nodes, exec)?;
    let h3 = spec.h.powi(3);
    let grid: f64 = fs.iter().map(|s| s.e.norm2() + s.b.norm2()).sum::<f64>() * 0.5 * h3;
    let initial: Vec<Vec3> = history.slice(0).iter().map(|s| s.x).collect();
    let tail = exterior_coulomb_energy(&initial, history.weights(), spec.center, l);
    let field = grid + tail;
    Ok(PseudoEnergy {
        kinetic,
        field,
        tail,
        total: kinetic + field,
    })
}

/// Both sides of the kinetic energy balance at node time `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyExchange {
    /// Centered difference `(K(t + dt) - K(t - dt)) / (2 dt)`.
    pub kinetic_rate: f64,
    /// Lattice quadrature of `E~ . (chi_eps * j)`.
    pub work: f64,
    pub residual: f64,
}

fn bracket(history: &TrajectoryHistory, t: f64) -> Result<usize> {
    let k = history.node_floor(t);
    if (t - history.time(k)).abs() > 1e-9 * history.dt {
        return Err(Error::InvalidParameter(format!(
            "t = {t} is not a history node (dt = {})",
            history.dt
        )));
    }
    if k == 0 || k + 1 > history.steps() {
        return Err(Error::HistoryTooShort {
            requested: t + history.dt,
            available: history.t_end(),
        });
    }
    Ok(k)
}

/// `|d/dt sum w_i e(xi_i) - int E . j dx|` at node time `t`.
///
/// The work term is evaluated as `int E~ . (chi_eps * j) dx`, which equals
/// `int E . j` for `E = chi_eps * E~`; the integrand is smooth, so the
/// lattice midpoint rule applies to it directly. Only cells inside the
/// support of the deposited current are visited.
pub fn energy_exchange_residual(
    history: &TrajectoryHistory,
    kernel: &RadialKernel,
    t: f64,
    spec: GridSpec,
) -> Result<f64> {
    Ok(energy_exchange(history, kernel, t, spec, Exec::default())?.residual)
}

pub fn energy_exchange(
    history: &TrajectoryHistory,
    kernel: &RadialKernel,
    t: f64,
    spec: GridSpec,
    exec: Exec,
) -> Result<EnergyExchange> {
    require_family(kernel, KernelFamily::Single)?;
    let k = bracket(history, t)?;
    let kin = |k: usize| -> f64 {
        history
            .slice(k)
            .iter()
            .zip(history.weights())
            .map(|(s, w)| w * energy(s.xi))
            .sum()
    };
    let kinetic_rate = (kin(k + 1) - kin(k - 1)) / (2.0 * history.dt);
    let profile = build_mollifier(kernel.epsilon, kernel.chi)?;
    let reach = profile.chi.support();
    let states = history.slice(k);
    let h = spec.h;
    let n = spec.n() as i64;
    let idx = |c: f64| ((c + 0.5 * n as f64 * h) / h - 0.5).round() as i64;
    let mut cells = BTreeSet::new();
    for s in states {
        let lo = s.x - Vec3::new(reach, reach, reach) - spec.center;
        let hi = s.x + Vec3::new(reach, reach, reach) - spec.center;
        for ix in idx(lo[0]) - 1..=idx(hi[0]) + 1 {
            for iy in idx(lo[1]) - 1..=idx(hi[1]) + 1 {
                for iz in idx(lo[2]) - 1..=idx(hi[2]) + 1 {
                    if [ix, iy, iz].iter().any(|&c| c < 0 || c >= n) {
                        return Err(Error::BoxTooSmall {
                            half_width: spec.half_width,
                            required: (s.x - spec.center).max_abs() + reach + h,
                        });
                    }
                    cells.insert((ix as usize, iy as usize, iz as usize));
                }
            }
        }
    }
    let weights = history.weights();
    let mut pts = Vec::new();
    let mut current = Vec::new();
    for &(ix, iy, iz) in &cells {
        let x = spec.node(ix, iy, iz);
        let mut j = Vec3::ZERO;
        for (s, w) in states.iter().zip(weights) {
            let c = profile.chi.value((x - s.x).norm());
            if c > 0.0 {
                j += s.vel * (w * c);
            }
        }
        if j != Vec3::ZERO {
            pts.push(x);
            current.push(j);
        }
    }
    let fs = field_eval_with(history, kernel, t, &pts, exec)?;
    let work = fs.iter().zip(&current).map(|(f, j)| f.e.dot(*j)).sum::<f64>() * h.powi(3);
    Ok(EnergyExchange {
        kinetic_rate,
        work,
        residual: (kinetic_rate - work).abs(),
    })
}

/// Lorentz-gauge defect on a lattice at node time `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeResidual {
    /// `max |d_t phi + div A|` over interior nodes.
    pub defect: f64,
    /// `max |grad phi| + max |A|` at time `t`.
    pub scale: f64,
    /// `defect / scale`, or 0 when both vanish.
    pub normalized: f64,
}

/// `||d_t phi + div A||_inf / (||grad phi||_inf + ||A||_inf)` with centered
/// differences in time (one history step) and space.
pub fn gauge_residual(
    history: &TrajectoryHistory,
    kernel: &RadialKernel,
    t: f64,
    spec: GridSpec,
) -> Result<f64> {
    Ok(gauge_defect(history, kernel, t, spec, Exec::default())?.normalized)
}

pub fn gauge_defect(
    history: &TrajectoryHistory,
    kernel: &RadialKernel,
    t: f64,
    spec: GridSpec,
    exec: Exec,
) -> Result<GaugeResidual> {
    let k = bracket(history, t)?;
    let dt = history.dt;
    let nodes = spec.nodes();
    let at = |kk: usize| field_eval_with(history, kernel, history.time(kk), &nodes, exec);
    let before = at(k - 1)?;
    let now = at(k)?;
    let after = at(k + 1)?;
    let n = spec.n();
    let id = |ix: usize, iy: usize, iz: usize| (ix * n + iy) * n + iz;
    let h2 = 2.0 * spec.h;
    let mut defect: f64 = 0.0;
    let mut grad: f64 = 0.0;
    for ix in 1..n.saturating_sub(1) {
        for iy in 1..n - 1 {
            for iz in 1..n - 1 {
                let c = id(ix, iy, iz);
                let phi_t = (after[c].phi - before[c].phi) / (2.0 * dt);
                let div_a = (now[id(ix + 1, iy, iz)].a[0] - now[id(ix - 1, iy, iz)].a[0]
                    + now[id(ix, iy + 1, iz)].a[1]
                    - now[id(ix, iy - 1, iz)].a[1]
                    + now[id(ix, iy, iz + 1)].a[2]
                    - now[id(ix, iy, iz - 1)].a[2])
                    / h2;
                defect = defect.max((phi_t + div_a).abs());
                let g = Vec3::new(
                    now[id(ix + 1, iy, iz)].phi - now[id(ix - 1, iy, iz)].phi,
                    now[id(ix, iy + 1, iz)].phi - now[id(ix, iy - 1, iz)].phi,
                    now[id(ix, iy, iz + 1)].phi - now[id(ix, iy, iz - 1)].phi,
                ) / h2;
                grad = grad.max(g.norm());
            }
        }
    }
    let a_max = now.iter().map(|s| s.a.norm()).fold(0.0, f64::max);
    let scale = grad + a_max;
    let normalized = if scale > 0.0 { defect / scale } else { 0.0 };
    Ok(GaugeResidual {
        defect,
        scale,
        normalized,
    })
}

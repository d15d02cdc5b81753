//! Tabulated kernels with bicubic Hermite interpolation.

use super::closed_form::{m_derivs, y_derivs};
use super::mollifier::{ChiFamily, MollifierProfile, RadialProfile};
use crate::error::{Error, Result};
use crate::vec3::Vec3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Which mollification the kernel carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    /// Built from `psi_eps = chi_eps * chi_eps`; drives the particle forces.
    Double,
    /// Built from `chi_eps` alone; used for the tilde fields of the energy.
    Single,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Double => "double",
            KernelFamily::Single => "single",
        }
    }
}

/// Per-row grid suprema of the derivatives entering the Lipschitz bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RowSup {
    /// `|grad_{t,x} Y|`.
    pub grad: f64,
    /// Spectral norm of the `(t, x)` Hessian of `Y`.
    pub hess: f64,
    /// `|grad_x m2|`.
    pub m_grad: f64,
    /// `|m2|`.
    pub m_abs: f64,
}

/// Suprema over the whole table.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Supnorms {
    pub grad_y: f64,
    pub hess_y: f64,
    pub grad_m: f64,
    pub abs_m: f64,
}

/// Kernel value and first derivatives at one `(tau, d)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KernelSample {
    pub value: f64,
    pub dt: f64,
    pub grad: Vec3,
}

/// Radial tables of `Y` and of the initial-layer potential `M`.
///
/// Each node stores `(f, f_t, f_r, f_tr)` so that the bicubic Hermite patch
/// reproduces values and both first derivatives at the nodes.
#[derive(Clone, Debug)]
pub struct RadialKernel {
    pub epsilon: f64,
    pub family: KernelFamily,
    pub chi: ChiFamily,
    pub dt: f64,
    pub dr: f64,
    pub nt: usize,
    pub nr: usize,
    /// Shell half-width: `2 eps` for [`KernelFamily::Double`], `eps` otherwise.
    pub support: f64,
    pub(crate) y: Vec<[f64; 4]>,
    pub(crate) m: Vec<[f64; 4]>,
    /// Potential layer derived from `y`, see [`potential_table`].
    pub(crate) pot: Vec<[f64; 4]>,
    pub(crate) rows: Vec<RowSup>,
    pub(crate) zero: bool,
}

#[inline]
fn cubic_basis(u: f64) -> ([f64; 4], [f64; 4]) {
    let u2 = u * u;
    let u3 = u2 * u;
    (
        [
            2.0 * u3 - 3.0 * u2 + 1.0,
            u3 - 2.0 * u2 + u,
            -2.0 * u3 + 3.0 * u2,
            u3 - u2,
        ],
        [
            6.0 * u2 - 6.0 * u,
            3.0 * u2 - 4.0 * u + 1.0,
            -6.0 * u2 + 6.0 * u,
            3.0 * u2 - 2.0 * u,
        ],
    )
}

/// Layer potential whose time nodes follow `M(t) = M(0) - int_0^t Y`, with
/// the integral taken exactly over the cubic Hermite interpolant of `Y` in
/// `t` (corrected trapezoid per cell). The same holds for `M_r` against
/// `Y_r`, so the bicubic patch of this table satisfies the identity at every
/// radius, not only on r-nodes.
pub(crate) fn potential_table(y: &[[f64; 4]], m: &[[f64; 4]], nt: usize, nr: usize, dt: f64) -> Vec<[f64; 4]> {
    let mut p = vec![[0.0; 4]; nt * nr];
    p[..nr].copy_from_slice(&m[..nr]);
    let cell = |a: f64, b: f64, da: f64, db: f64| 0.5 * dt * (a + b) + dt * dt / 12.0 * (da - db);
    for it in 1..nt {
        for ir in 0..nr {
            let (prev, y0, y1) = (p[(it - 1) * nr + ir], y[(it - 1) * nr + ir], y[it * nr + ir]);
            p[it * nr + ir] = [
                prev[0] - cell(y0[0], y1[0], y0[1], y1[1]),
                -y1[0],
                prev[2] - cell(y0[2], y1[2], y0[3], y1[3]),
                -y1[2],
            ];
        }
    }
    p
}

fn hessian_norm(ytt: f64, ytr: f64, yrr: f64, yr_over_r: f64) -> f64 {
    let mean = 0.5 * (ytt + yrr);
    let rad = (0.25 * (ytt - yrr).powi(2) + ytr * ytr).sqrt();
    (mean.abs() + rad).max(yr_over_r.abs())
}

impl RadialKernel {
    /// Tabulates `Y` and `M` on `[0, t_max] x [0, t_max + support]`.
    pub fn build(
        profile: &MollifierProfile,
        family: KernelFamily,
        t_max: f64,
        dt: f64,
        dr: f64,
    ) -> Result<Self> {
        let eps = profile.epsilon;
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "t_max must be positive, got {t_max}"
            )));
        }
        for (name, spacing) in [("dt", dt), ("dr", dr)] {
            if !(spacing > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {spacing}"
                )));
            }
            if spacing > 0.5 * eps {
                return Err(Error::GridTooCoarse {
                    name,
                    spacing,
                    limit: 0.5 * eps,
                });
            }
        }
        let p: &RadialProfile = match family {
            KernelFamily::Double => &profile.psi,
            KernelFamily::Single => &profile.chi,
        };
        let support = p.support();
        let nt = (t_max / dt - 1e-9).ceil() as usize + 1;
        let nr = ((t_max + support) / dr - 1e-9).ceil() as usize + 2;
        let mut y = vec![[0.0; 4]; nt * nr];
        let mut m = vec![[0.0; 4]; nt * nr];
        let mut rows = vec![RowSup::default(); nt];
        for it in 0..nt {
            let t = it as f64 * dt;
            let row = &mut rows[it];
            for ir in 0..nr {
                let r = ir as f64 * dr;
                let yd = y_derivs(p, t, r);
                let md = m_derivs(p, t, r);
                y[it * nr + ir] = [yd.y, yd.yt, yd.yr, yd.ytr];
                m[it * nr + ir] = [md.m, md.mt, md.mr, md.mtr];
                let (yr_r, mr_r) = if r > 0.0 {
                    (yd.yr / r, md.mr / r)
                } else {
                    (yd.yrr, md.mrr)
                };
                row.grad = row.grad.max(yd.yt.hypot(yd.yr));
                row.hess = row.hess.max(hessian_norm(yd.ytt, yd.ytr, yd.yrr, yr_r));
                row.m_grad = row.m_grad.max(md.mrr.abs().max(mr_r.abs()));
                row.m_abs = row.m_abs.max(md.mr.abs());
            }
        }
        let pot = potential_table(&y, &m, nt, nr, dt);
        Ok(RadialKernel {
            epsilon: eps,
            family,
            chi: profile.family,
            dt,
            dr,
            nt,
            nr,
            support,
            y,
            m,
            pot,
            rows,
            zero: false,
        })
    }

    /// Double-mollified kernel with the default `eps / 8` spacings.
    pub fn build_default(profile: &MollifierProfile, t_max: f64) -> Result<Self> {
        let h = profile.epsilon / 8.0;
        Self::build(profile, KernelFamily::Double, t_max, h, h)
    }

    /// Largest tabulated time.
    pub fn t_max(&self) -> f64 {
        (self.nt - 1) as f64 * self.dt
    }

    pub fn r_max(&self) -> f64 {
        (self.nr - 1) as f64 * self.dr
    }

    /// Node data `(Y, Y_t, Y_r, Y_tr)` at grid indices.
    pub fn y_node(&self, it: usize, ir: usize) -> [f64; 4] {
        self.y[it * self.nr + ir]
    }

    /// Node data `(M, M_t, M_r, M_tr)` at grid indices.
    pub fn m_node(&self, it: usize, ir: usize) -> [f64; 4] {
        self.m[it * self.nr + ir]
    }

    pub fn rows(&self) -> &[RowSup] {
        &self.rows
    }

    pub fn supnorms(&self) -> Supnorms {
        self.rows.iter().fold(Supnorms::default(), |s, r| Supnorms {
            grad_y: s.grad_y.max(r.grad),
            hess_y: s.hess_y.max(r.hess),
            grad_m: s.grad_m.max(r.m_grad),
            abs_m: s.abs_m.max(r.m_abs),
        })
    }

    /// Same grid with every table set to zero; the analytic Coulomb exterior
    /// of the initial layer is switched off as well.
    pub fn zeroed(&self) -> Self {
        let mut k = self.clone();
        k.y.iter_mut().for_each(|v| *v = [0.0; 4]);
        k.m.iter_mut().for_each(|v| *v = [0.0; 4]);
        k.pot.iter_mut().for_each(|v| *v = [0.0; 4]);
        k.rows.iter_mut().for_each(|v| *v = RowSup::default());
        k.zero = true;
        k
    }

    /// True when every table entry is zero (the free-streaming kernel).
    pub fn is_zero(&self) -> bool {
        self.zero
    }

    #[inline]
    fn check_time(&self, t: f64) -> Result<()> {
        let t_max = self.t_max();
        if !(t >= 0.0 && t <= t_max * (1.0 + 1e-12)) {
            return Err(Error::OutOfRange { t, t_max });
        }
        Ok(())
    }

    /// Bicubic Hermite patch: `(f, f_t, f_r)` at `(t, r)`.
    #[inline]
    fn patch(&self, table: &[[f64; 4]], t: f64, r: f64) -> (f64, f64, f64) {
        let ft = t / self.dt;
        let fr = r / self.dr;
        let it = (ft as usize).min(self.nt - 2);
        let ir = (fr as usize).min(self.nr - 2);
        let u = ft - it as f64;
        let w = fr - ir as f64;
        let (bu, du) = cubic_basis(u);
        let (bw, dw) = cubic_basis(w);
        let (ht, hr) = (self.dt, self.dr);
        let mut f = 0.0;
        let mut f_t = 0.0;
        let mut f_r = 0.0;
        for a in 0..2 {
            let n0 = table[(it + a) * self.nr + ir];
            let n1 = table[(it + a) * self.nr + ir + 1];
            // along r at this t-node: values and t-derivatives
            let g = n0[0] * bw[0] + hr * n0[2] * bw[1] + n1[0] * bw[2] + hr * n1[2] * bw[3];
            let gd = n0[0] * dw[0] + hr * n0[2] * dw[1] + n1[0] * dw[2] + hr * n1[2] * dw[3];
            let gt = n0[1] * bw[0] + hr * n0[3] * bw[1] + n1[1] * bw[2] + hr * n1[3] * bw[3];
            let gtd = n0[1] * dw[0] + hr * n0[3] * dw[1] + n1[1] * dw[2] + hr * n1[3] * dw[3];
            let (av, ad, bv, bd) = (bu[2 * a], du[2 * a], bu[2 * a + 1], du[2 * a + 1]);
            f += g * av + ht * gt * bv;
            f_t += g * ad + ht * gt * bd;
            f_r += gd * av + ht * gtd * bv;
        }
        (f, f_t / ht, f_r / hr)
    }

    /// `(Y, Y_t, Y_r)` at radius `r`; exactly zero off the shell.
    #[inline]
    pub fn radial(&self, tau: f64, r: f64) -> (f64, f64, f64) {
        if (r - tau).abs() >= self.support {
            return (0.0, 0.0, 0.0);
        }
        self.patch(&self.y, tau, r)
    }

    /// Unchecked kernel evaluation used inside the force loops.
    #[inline]
    pub(crate) fn sample(&self, tau: f64, d: Vec3) -> KernelSample {
        let r = d.norm();
        if (r - tau).abs() >= self.support {
            return KernelSample::default();
        }
        let (value, dt, yr) = self.patch(&self.y, tau, r);
        let grad = if r > 0.0 { d * (yr / r) } else { Vec3::ZERO };
        KernelSample { value, dt, grad }
    }

    /// `Y(tau, |d|)`, `dY/dt` and `grad_x Y` at displacement `d`.
    pub fn eval(&self, tau: f64, d: Vec3) -> Result<KernelSample> {
        self.check_time(tau)?;
        Ok(self.sample(tau, d))
    }

    /// `(M, M_r)` of the initial-layer potential at radius `r`.
    #[inline]
    pub(crate) fn layer_radial(&self, t: f64, r: f64) -> (f64, f64) {
        if r <= t - self.support {
            return (0.0, 0.0);
        }
        if r >= t + self.support {
            let m = 1.0 / (4.0 * PI * r);
            return (m, -m / r);
        }
        let (m, _, mr) = self.patch(&self.m, t, r);
        (m, mr)
    }

    #[inline]
    pub(crate) fn layer_force(&self, t: f64, d: Vec3) -> Vec3 {
        let r = d.norm();
        if r == 0.0 || self.zero {
            return Vec3::ZERO;
        }
        let (_, mr) = self.layer_radial(t, r);
        d * (-mr / r)
    }

    /// Layer potential from the integrated table inside the tabulated
    /// range, so that `d/dt` of the potential of a resting charge cancels the
    /// memory integral of `Y` exactly on aligned grids.
    #[inline]
    pub(crate) fn layer_potential(&self, t: f64, d: Vec3) -> f64 {
        if self.zero {
            return 0.0;
        }
        let r = d.norm();
        if r >= self.r_max() {
            return 1.0 / (4.0 * PI * r);
        }
        self.patch(&self.pot, t, r).0
    }

    /// Initial-layer force kernel `m2(t, d) = -grad (p * P(t, .))(d)`.
    pub fn eval_initial_layer(&self, t: f64, d: Vec3) -> Result<Vec3> {
        self.check_time(t)?;
        Ok(self.layer_force(t, d))
    }

    /// Initial-layer potential `M(t, |d|)`, consistent with the tabulated `Y`.
    pub fn eval_initial_potential(&self, t: f64, d: Vec3) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.layer_potential(t, d))
    }

    /// Upper-bound estimator of the Lipschitz constant of the kernel pair
    /// `(r_eps, m_eps)` over `[0, T]`, from grid suprema:
    /// `3 |D^2 Y| + 3 |D Y| sup|D v| + |D m2|` with `sup|D v| = 1`.
    pub fn lipschitz_estimate(&self, t_end: f64) -> Result<f64> {
        if t_end > self.t_max() * (1.0 + 1e-12) {
            return Err(Error::OutOfRange {
                t: t_end,
                t_max: self.t_max(),
            });
        }
        let mut s = RowSup::default();
        for (k, row) in self.rows.iter().enumerate() {
            if k as f64 * self.dt > t_end + 1e-12 * self.dt {
                break;
            }
            s.grad = s.grad.max(row.grad);
            s.hess = s.hess.max(row.hess);
            s.m_grad = s.m_grad.max(row.m_grad);
        }
        Ok(3.0 * s.hess + 3.0 * s.grad + s.m_grad)
    }
}

//! Radial mollifier profiles.
//!
//! A profile is a radial function `f(r)` supported in `[0, support]`, stored
//! at uniform nodes with its first two derivatives and interpolated by
//! quintic Hermite polynomials. Two cumulatives are kept exactly (4-point
//! Gauss-Legendre is exact on each panel):
//!
//! * `cum(s)  = int_0^s u f(u) du` (the spherical-mean cumulative),
//! * `mass(s) = int_0^s u^2 f(u) du`,
//!
//! and the double cumulative `int_0^s cum(u) du = s cum(s) - mass(s)`.
//!
//! The unit-scale (eps = 1) profiles are computed once per family and cached;
//! `chi_eps(r) = eps^-3 chi(r / eps)` rescales them.

use crate::error::{Error, Result};
use crate::quadrature::{gl4, integrate};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

/// Panels of the unit-scale `chi` grid.
const PANELS: usize = 4096;
/// Panels of the unit-scale `psi` grid; `psi` is smoother than `chi`.
const PSI_PANELS: usize = 512;
const QUAD_TOL: f64 = 1e-12;

/// Shipped radial bump shapes for the base mollifier `chi`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChiFamily {
    /// `exp(-1 / (1 - |x|^2))` on the unit ball.
    #[default]
    Bump,
    /// `(1 - |x|^2)^4` on the unit ball.
    Polynomial,
}

impl ChiFamily {
    pub fn name(self) -> &'static str {
        match self {
            ChiFamily::Bump => "bump",
            ChiFamily::Polynomial => "polynomial",
        }
    }

    /// Unnormalized shape and its first two radial derivatives on `[0, 1)`.
    fn raw(self, u: f64) -> [f64; 3] {
        if u >= 1.0 {
            return [0.0; 3];
        }
        let q = 1.0 - u * u;
        match self {
            ChiFamily::Bump => {
                let f = (-1.0 / q).exp();
                let g1 = -2.0 * u / (q * q);
                let g2 = -2.0 / (q * q) - 8.0 * u * u / (q * q * q);
                [f, f * g1, f * (g1 * g1 + g2)]
            }
            ChiFamily::Polynomial => {
                let f = q.powi(4);
                let d1 = -8.0 * u * q.powi(3);
                let d2 = -8.0 * q.powi(3) + 48.0 * u * u * q * q;
                [f, d1, d2]
            }
        }
    }
}

impl fmt::Display for ChiFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChiFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bump" | "exponential" | "exp" => Ok(ChiFamily::Bump),
            "polynomial" | "poly" => Ok(ChiFamily::Polynomial),
            _ => Err(Error::UnknownFamily(s.to_string())),
        }
    }
}

/// Tabulated radial profile with exact cumulatives.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    support: f64,
    h: f64,
    f: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    cum: Vec<f64>,
    mass: Vec<f64>,
}

#[inline]
fn quintic(t: f64) -> ([f64; 6], [f64; 6], [f64; 6]) {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let v = [
        1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
        t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
        0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5,
        10.0 * t3 - 15.0 * t4 + 6.0 * t5,
        -4.0 * t3 + 7.0 * t4 - 3.0 * t5,
        0.5 * t3 - t4 + 0.5 * t5,
    ];
    let d = [
        -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
        1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
        t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4,
        30.0 * t2 - 60.0 * t3 + 30.0 * t4,
        -12.0 * t2 + 28.0 * t3 - 15.0 * t4,
        1.5 * t2 - 4.0 * t3 + 2.5 * t4,
    ];
    let dd = [
        -60.0 * t + 180.0 * t2 - 120.0 * t3,
        -36.0 * t + 96.0 * t2 - 60.0 * t3,
        1.0 - 9.0 * t + 18.0 * t2 - 10.0 * t3,
        60.0 * t - 180.0 * t2 + 120.0 * t3,
        -24.0 * t + 84.0 * t2 - 60.0 * t3,
        3.0 * t - 12.0 * t2 + 10.0 * t3,
    ];
    (v, d, dd)
}

impl RadialProfile {
    /// Builds a profile from node samples `(f, f', f'')` at `k * support / n`.
    fn from_nodes(support: f64, nodes: Vec<[f64; 3]>) -> Self {
        let n = nodes.len() - 1;
        let h = support / n as f64;
        let mut p = RadialProfile {
            support,
            h,
            f: nodes.iter().map(|v| v[0]).collect(),
            d1: nodes.iter().map(|v| v[1]).collect(),
            d2: nodes.iter().map(|v| v[2]).collect(),
            cum: vec![0.0; n + 1],
            mass: vec![0.0; n + 1],
        };
        p.rebuild_cumulatives();
        p
    }

    fn rebuild_cumulatives(&mut self) {
        let n = self.f.len() - 1;
        for k in 0..n {
            let a = k as f64 * self.h;
            let b = a + self.h;
            self.cum[k + 1] = self.cum[k] + gl4(|u| u * self.panel(k, u).0, a, b);
            self.mass[k + 1] = self.mass[k] + gl4(|u| u * u * self.panel(k, u).0, a, b);
        }
    }

    fn scale_values(&mut self, s: f64) {
        for v in self.f.iter_mut().chain(&mut self.d1).chain(&mut self.d2) {
            *v *= s;
        }
        for v in self.cum.iter_mut().chain(&mut self.mass) {
            *v *= s;
        }
    }

    /// Copy rescaled to `f_eps(r) = eps^-3 f(r / eps)`.
    fn rescaled(&self, eps: f64) -> Self {
        let e3 = eps.powi(-3);
        RadialProfile {
            support: self.support * eps,
            h: self.h * eps,
            f: self.f.iter().map(|v| v * e3).collect(),
            d1: self.d1.iter().map(|v| v * e3 / eps).collect(),
            d2: self.d2.iter().map(|v| v * e3 / (eps * eps)).collect(),
            cum: self.cum.iter().map(|v| v / eps).collect(),
            mass: self.mass.clone(),
        }
    }

    #[inline]
    fn panel(&self, k: usize, r: f64) -> (f64, f64, f64) {
        let h = self.h;
        let t = (r - k as f64 * h) / h;
        let (v, d, dd) = quintic(t);
        let c = [
            self.f[k],
            h * self.d1[k],
            h * h * self.d2[k],
            self.f[k + 1],
            h * self.d1[k + 1],
            h * h * self.d2[k + 1],
        ];
        let mut y = 0.0;
        let mut y1 = 0.0;
        let mut y2 = 0.0;
        for j in 0..6 {
            y += c[j] * v[j];
            y1 += c[j] * d[j];
            y2 += c[j] * dd[j];
        }
        (y, y1 / h, y2 / (h * h))
    }

    #[inline]
    fn locate(&self, r: f64) -> usize {
        let n = self.f.len() - 1;
        ((r / self.h) as usize).min(n - 1)
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    /// `(f, f', f'')` at radius `r >= 0`; exactly zero outside the support.
    #[inline]
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        if r >= self.support {
            return (0.0, 0.0, 0.0);
        }
        self.panel(self.locate(r), r)
    }

    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    /// `int_0^s u f(u) du`, saturating exactly beyond the support.
    #[inline]
    pub fn cum(&self, s: f64) -> f64 {
        if s >= self.support {
            return *self.cum.last().unwrap();
        }
        if s <= 0.0 {
            return 0.0;
        }
        let k = self.locate(s);
        self.cum[k] + gl4(|u| u * self.panel(k, u).0, k as f64 * self.h, s)
    }

    /// `int_0^s u^2 f(u) du`.
    #[inline]
    pub fn mass(&self, s: f64) -> f64 {
        if s >= self.support {
            return *self.mass.last().unwrap();
        }
        if s <= 0.0 {
            return 0.0;
        }
        let k = self.locate(s);
        self.mass[k] + gl4(|u| u * u * self.panel(k, u).0, k as f64 * self.h, s)
    }

    /// Saturated value of [`RadialProfile::cum`].
    pub fn cum_max(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// `int_0^s cum(u) du` for `s >= 0`.
    #[inline]
    pub fn cum2(&self, s: f64) -> f64 {
        if s >= self.support {
            return s * self.cum_max() - *self.mass.last().unwrap();
        }
        s * self.cum(s) - self.mass(s)
    }

    /// Odd extension of [`RadialProfile::cum2`].
    #[inline]
    pub fn cum2_odd(&self, u: f64) -> f64 {
        if u < 0.0 {
            -self.cum2(-u)
        } else {
            self.cum2(u)
        }
    }

    /// `4 pi int u^2 f`, the 3-D integral of the radial function.
    pub fn total_mass(&self) -> f64 {
        4.0 * PI * *self.mass.last().unwrap()
    }

    /// Odd function `w(u) = u f(|u|)`.
    #[inline]
    pub fn w(&self, u: f64) -> f64 {
        u * self.value(u.abs())
    }

    /// `w'(u) = f(|u|) + |u| f'(|u|)` (even).
    #[inline]
    pub fn w1(&self, u: f64) -> f64 {
        let a = u.abs();
        let (f, f1, _) = self.eval(a);
        f + a * f1
    }

    /// `w''(u) = sgn(u) (2 f'(|u|) + |u| f''(|u|))` (odd).
    #[inline]
    pub fn w2(&self, u: f64) -> f64 {
        let a = u.abs();
        let (_, f1, f2) = self.eval(a);
        (2.0 * f1 + a * f2).copysign(u)
    }
}

struct UnitProfiles {
    chi: RadialProfile,
    psi: RadialProfile,
}

fn unit_profiles(family: ChiFamily) -> Arc<UnitProfiles> {
    static BUMP: OnceLock<Arc<UnitProfiles>> = OnceLock::new();
    static POLY: OnceLock<Arc<UnitProfiles>> = OnceLock::new();
    let cell = match family {
        ChiFamily::Bump => &BUMP,
        ChiFamily::Polynomial => &POLY,
    };
    cell.get_or_init(|| Arc::new(compute_unit_profiles(family))).clone()
}

fn compute_unit_profiles(family: ChiFamily) -> UnitProfiles {
    let raw_mass = 4.0 * PI * integrate(|u| u * u * family.raw(u)[0], 0.0, 1.0, QUAD_TOL);
    let c = 1.0 / raw_mass;
    let chi_fn = |u: f64| {
        let r = family.raw(u);
        [c * r[0], c * r[1], c * r[2]]
    };
    let chi_nodes: Vec<[f64; 3]> = (0..=PANELS)
        .map(|k| chi_fn(k as f64 / PANELS as f64))
        .collect();
    let mut chi = RadialProfile::from_nodes(1.0, chi_nodes);
    let m = chi.total_mass();
    chi.scale_values(1.0 / m);

    let psi_nodes: Vec<[f64; 3]> = (0..=PSI_PANELS)
        .map(|k| autocorrelation(&chi, 2.0 * k as f64 / PSI_PANELS as f64))
        .collect();
    let mut psi = RadialProfile::from_nodes(2.0, psi_nodes);
    let m = psi.total_mass();
    psi.scale_values(1.0 / m);
    UnitProfiles { chi, psi }
}

/// `(psi, psi', psi'')` of `psi = chi * chi` at radius `r` by the radial
/// convolution reduction
/// `psi(r) = (2 pi / r) int s chi(s) [X(r+s) - X(|r-s|)] ds`, `X = chi.cum`.
fn autocorrelation(chi: &RadialProfile, r: f64) -> [f64; 3] {
    let a = chi.support();
    if r >= 2.0 * a {
        return [0.0; 3];
    }
    if r == 0.0 {
        let v = 4.0 * PI * integrate(|s| (s * chi.value(s)).powi(2), 0.0, a, QUAD_TOL);
        let d2 = -4.0 * PI / 3.0 * integrate(|s| (s * chi.eval(s).1).powi(2), 0.0, a, QUAD_TOL);
        return [v, 0.0, d2];
    }
    let lo = (r - a).max(0.0);
    let mut breaks = vec![lo, a];
    if r > lo && r < a {
        breaks.push(r);
    }
    if a - r > lo && a - r < a {
        breaks.push(a - r);
    }
    breaks.sort_by(f64::total_cmp);
    let piece = |g: &dyn Fn(f64) -> f64| {
        breaks
            .windows(2)
            .map(|w| integrate(|s| s * chi.value(s) * g(s), w[0], w[1], QUAD_TOL))
            .sum::<f64>()
    };
    let i0 = 2.0 * PI * piece(&|s| chi.cum(r + s) - chi.cum((r - s).abs()));
    let i1 = 2.0 * PI * piece(&|s| chi.w(r + s) - chi.w(r - s));
    let i2 = 2.0 * PI * piece(&|s| chi.w1(r + s) - chi.w1(r - s));
    let v = i0 / r;
    let d1 = (i1 - v) / r;
    let d2 = v / (r * r) - d1 / r - i1 / (r * r) + i2 / r;
    [v, d1, d2]
}

/// Mollifier `chi_eps`, its autocorrelation `psi_eps` and their cumulatives.
#[derive(Clone, Debug)]
pub struct MollifierProfile {
    pub epsilon: f64,
    pub family: ChiFamily,
    /// `chi_eps`, supported on `[0, eps]`.
    pub chi: RadialProfile,
    /// `psi_eps = chi_eps * chi_eps`, supported on `[0, 2 eps]`.
    pub psi: RadialProfile,
}

/// Builds `chi_eps` and `psi_eps` for the given family.
pub fn build_mollifier(epsilon: f64, family: ChiFamily) -> Result<MollifierProfile> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::NonPositiveEpsilon(epsilon));
    }
    let unit = unit_profiles(family);
    Ok(MollifierProfile {
        epsilon,
        family,
        chi: unit.chi.rescaled(epsilon),
        psi: unit.psi.rescaled(epsilon),
    })
}

/// Same as [`build_mollifier`] with the family given by name.
pub fn build_mollifier_named(epsilon: f64, family: &str) -> Result<MollifierProfile> {
    build_mollifier(epsilon, family.parse()?)
}

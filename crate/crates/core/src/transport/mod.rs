//! Monge-Kantorovich-Rubinstein distances with truncated cost.
//!
//! `dist(mu, nu) = min over couplings of sum pi_ij (1 ^ |z_i - z'_j|)` with
//! the Euclidean norm on phase space `R^6`. Exact mode solves the
//! transportation LP (assignment for uniform equal-size ensembles, network
//! simplex otherwise) and returns a dual certificate; entropic mode returns
//! an upper bound with its duality gap.

pub mod assignment;
pub mod simplex;
pub mod sinkhorn;

use crate::dynamics::{velocity, PhaseEnsemble};
use crate::error::{Error, Result};
use crate::vec3::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use serde::{Deserialize, Serialize};
pub use sinkhorn::SinkhornOptions;

/// Default exact-mode budget on the total atom count.
pub const DEFAULT_BUDGET: usize = 1024;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MkrMode {
    #[default]
    Exact,
    Entropic,
}

impl std::str::FromStr for MkrMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(MkrMode::Exact),
            "entropic" => Ok(MkrMode::Entropic),
            _ => Err(Error::InvalidParameter(format!("unknown mode `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct MkrOptions {
    /// Largest total atom count solved in exact mode.
    pub budget: usize,
    pub sinkhorn: SinkhornOptions,
}

impl Default for MkrOptions {
    fn default() -> Self {
        MkrOptions {
            budget: DEFAULT_BUDGET,
            sinkhorn: SinkhornOptions::default(),
        }
    }
}

/// Kantorovich potentials certifying an exact plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub dual_value: f64,
    /// `max(f_i + g_j - c_ij, 0)` over all pairs.
    pub feasibility_violation: f64,
    /// `sum pi_ij |c_ij - f_i - g_j|`.
    pub slackness_violation: f64,
}

/// Coupling stored by its nonzero entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
    pub cost: f64,
    pub row_residual: f64,
    pub col_residual: f64,
    pub mode: MkrMode,
    /// Primal minus dual bound; zero up to rounding in exact mode.
    pub gap: f64,
    pub certificate: Option<DualCertificate>,
}

impl TransportPlan {
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for &(i, j, w) in &self.entries {
            d[i][j] += w;
        }
        d
    }
}

/// Truncated Euclidean cost between two feature rows.
#[inline]
fn truncated(a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    d2.sqrt().min(1.0)
}

fn phase_rows(e: &PhaseEnsemble) -> Vec<Vec<f64>> {
    e.points
        .iter()
        .map(|p| vec![p.x[0], p.x[1], p.x[2], p.xi[0], p.xi[1], p.xi[2]])
        .collect()
}

fn position_rows(e: &PhaseEnsemble) -> Vec<Vec<f64>> {
    e.points.iter().map(|p| p.x.0.to_vec()).collect()
}

fn solve_rows(
    xa: &[Vec<f64>],
    wa: &[f64],
    xb: &[Vec<f64>],
    wb: &[f64],
    mode: MkrMode,
    opts: &MkrOptions,
) -> Result<(f64, TransportPlan)> {
    let (rows, cols) = (xa.len(), xb.len());
    // zero-weight atoms never carry mass
    let ia: Vec<usize> = (0..rows).filter(|&i| wa[i] > 0.0).collect();
    let ib: Vec<usize> = (0..cols).filter(|&j| wb[j] > 0.0).collect();
    let (m, n) = (ia.len(), ib.len());
    let a: Vec<f64> = ia.iter().map(|&i| wa[i]).collect();
    let b: Vec<f64> = ib.iter().map(|&j| wb[j]).collect();
    let mut cost = vec![0.0; m * n];
    for (r, &i) in ia.iter().enumerate() {
        for (c, &j) in ib.iter().enumerate() {
            cost[r * n + c] = truncated(&xa[i], &xb[j]);
        }
    }
    let (entries, gap, certificate): (Vec<(usize, usize, f64)>, f64, Option<(Vec<f64>, Vec<f64>)>) =
        if m == 0 || n == 0 {
            (Vec::new(), 0.0, None)
        } else {
            match mode {
                MkrMode::Exact => {
                    if m + n > opts.budget {
                        return Err(Error::OverBudget {
                            atoms: m + n,
                            budget: opts.budget,
                        });
                    }
                    let uniform_equal = m == n
                        && a.iter().all(|&w| w == a[0])
                        && b.iter().all(|&w| w == a[0]);
                    if uniform_equal {
                        let s = assignment::solve(&cost, n);
                        let e = (0..n).map(|i| (i, s.col_of[i], a[i])).collect();
                        (e, 0.0, Some((s.u, s.v)))
                    } else {
                        let s = simplex::solve(&a, &b, &cost).ok_or_else(|| {
                            Error::InvalidParameter("transportation LP is unbounded".into())
                        })?;
                        (s.flows, 0.0, Some((s.f, s.g)))
                    }
                }
                MkrMode::Entropic => {
                    let s = sinkhorn::solve(&a, &b, &cost, &opts.sinkhorn)?;
                    let e = s
                        .plan
                        .iter()
                        .enumerate()
                        .filter(|(_, &p)| p > 0.0)
                        .map(|(k, &p)| (k / n, k % n, p))
                        .collect();
                    (e, (s.upper - s.lower).max(0.0), None)
                }
            }
        };
    let mut row_sum = vec![0.0; m];
    let mut col_sum = vec![0.0; n];
    let mut total = 0.0;
    for &(r, c, w) in &entries {
        row_sum[r] += w;
        col_sum[c] += w;
        total += w * cost[r * n + c];
    }
    let row_residual = row_sum.iter().zip(&a).map(|(s, w)| (s - w).abs()).fold(0.0, f64::max);
    let col_residual = col_sum.iter().zip(&b).map(|(s, w)| (s - w).abs()).fold(0.0, f64::max);
    let certificate = certificate.map(|(f, g)| {
        let mut feas: f64 = 0.0;
        for r in 0..m {
            for c in 0..n {
                feas = feas.max(f[r] + g[c] - cost[r * n + c]);
            }
        }
        let slack = entries
            .iter()
            .map(|&(r, c, w)| w * (cost[r * n + c] - f[r] - g[c]).abs())
            .sum();
        let dual_value = a.iter().zip(&f).map(|(w, v)| w * v).sum::<f64>()
            + b.iter().zip(&g).map(|(w, v)| w * v).sum::<f64>();
        let mut full_f = vec![0.0; rows];
        let mut full_g = vec![0.0; cols];
        for (r, &i) in ia.iter().enumerate() {
            full_f[i] = f[r];
        }
        for (c, &j) in ib.iter().enumerate() {
            full_g[j] = g[c];
        }
        DualCertificate {
            f: full_f,
            g: full_g,
            dual_value,
            feasibility_violation: feas.max(0.0),
            slackness_violation: slack,
        }
    });
    let gap = match &certificate {
        Some(c) => (total - c.dual_value).abs(),
        None => gap,
    };
    let plan = TransportPlan {
        rows,
        cols,
        entries: entries.into_iter().map(|(r, c, w)| (ia[r], ib[c], w)).collect(),
        cost: total,
        row_residual,
        col_residual,
        mode,
        gap,
        certificate,
    };
    Ok((total, plan))
}

/// MKR distance between two phase-space ensembles.
pub fn mkr_distance(mu: &PhaseEnsemble, nu: &PhaseEnsemble, mode: MkrMode) -> Result<(f64, TransportPlan)> {
    mkr_distance_with(mu, nu, mode, &MkrOptions::default())
}

pub fn mkr_distance_with(
    mu: &PhaseEnsemble,
    nu: &PhaseEnsemble,
    mode: MkrMode,
    opts: &MkrOptions,
) -> Result<(f64, TransportPlan)> {
    mu.validate()?;
    nu.validate()?;
    solve_rows(&phase_rows(mu), &mu.weights, &phase_rows(nu), &nu.weights, mode, opts)
}

/// Number of sampled test fields in [`marginal_distance`].
pub const TEST_FIELDS: usize = 256;

/// Test field `psi(x) = amp * dir * sin(k . x + phase)` with
/// `max(sup |psi|, Lip psi) <= 1`.
#[derive(Clone, Copy, Debug)]
struct TestField {
    k: Vec3,
    phase: f64,
    dir: Vec3,
    amp: f64,
}

impl TestField {
    #[inline]
    fn eval(&self, x: Vec3) -> Vec3 {
        self.dir * (self.amp * (self.k.dot(x) + self.phase).sin())
    }
}

fn test_fields() -> Vec<TestField> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f1e1d);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut out: Vec<TestField> = (0..3)
        .map(|a| {
            let mut d = [0.0; 3];
            d[a] = 1.0;
            TestField {
                k: Vec3::ZERO,
                phase: half_pi,
                dir: Vec3(d),
                amp: 1.0,
            }
        })
        .collect();
    while out.len() < TEST_FIELDS {
        let kd: [f64; 3] = UnitSphere.sample(&mut rng);
        let dd: [f64; 3] = UnitSphere.sample(&mut rng);
        let kn: f64 = rng.random_range(0.25..8.0);
        out.push(TestField {
            k: Vec3(kd) * kn,
            phase: rng.random_range(0.0..std::f64::consts::TAU),
            dir: Vec3(dd),
            amp: 1.0 / kn.max(1.0),
        });
    }
    out
}

/// `(position-marginal MKR distance, sampled current dual bound)`.
///
/// The second value is `max over test fields |int psi . (j_mu - j_nu)|` with
/// `j = int v(xi) f dxi`, a lower bound for the dual current distance.
pub fn marginal_distance(mu: &PhaseEnsemble, nu: &PhaseEnsemble) -> Result<(f64, f64)> {
    marginal_distance_with(mu, nu, &MkrOptions::default())
}

pub fn marginal_distance_with(
    mu: &PhaseEnsemble,
    nu: &PhaseEnsemble,
    opts: &MkrOptions,
) -> Result<(f64, f64)> {
    mu.validate()?;
    nu.validate()?;
    let (pos, _) = solve_rows(
        &position_rows(mu),
        &mu.weights,
        &position_rows(nu),
        &nu.weights,
        MkrMode::Exact,
        opts,
    )?;
    let current = |e: &PhaseEnsemble, f: &TestField| -> f64 {
        e.points
            .iter()
            .zip(&e.weights)
            .map(|(p, w)| w * f.eval(p.x).dot(velocity(p.xi)))
            .sum()
    };
    let bound = test_fields()
        .iter()
        .map(|f| (current(mu, f) - current(nu, f)).abs())
        .fold(0.0, f64::max);
    Ok((pos, bound))
}

/// Dobrushin stability constant `(1 + T L) exp(T^2 L)`.
pub fn dobrushin_bound(t: f64, l: f64) -> f64 {
    (1.0 + t * l) * (t * t * l).exp()
}

/// Natural logarithm of [`dobrushin_bound`], finite for large `L`.
pub fn dobrushin_log_bound(t: f64, l: f64) -> f64 {
    (t * l).ln_1p() + t * t * l
}

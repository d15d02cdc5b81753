//! Kernel, transport and solver-oracle acceptance checks.

use super::manifest::{KernelThresholds, OracleThresholds, TransportThresholds};
use super::report::Criterion;
use crate::dynamics::{sample_cloud, simulate, ForcePath, PhaseEnsemble, PhasePoint, SimConfig, TrajectoryHistory};
use crate::error::Result;
use crate::kernels::{build_kernel_tables, build_mollifier, ChiFamily, RadialKernel};
use crate::meanfield::{picard_solve, reference_flow};
use crate::quadrature::integrate;
use crate::transport::{mkr_distance, MkrMode};
use crate::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// `int 4 pi r^2 Y(t, r) dr` over the shell, panel by panel.
pub fn table_mass(k: &RadialKernel, t: f64) -> f64 {
    let lo = (t - k.support).max(0.0);
    let hi = t + k.support;
    let panels = 64;
    (0..panels)
        .map(|p| {
            let a = lo + (hi - lo) * p as f64 / panels as f64;
            let b = lo + (hi - lo) * (p + 1) as f64 / panels as f64;
            integrate(|r| 4.0 * PI * r * r * k.radial(t, r).0, a, b, 1e-13)
        })
        .sum()
}

/// `t <psi(|x - t omega|)>_omega` with `|x| = r`, stratified in the polar
/// cosine with `n` samples.
pub fn sphere_average(psi: &dyn Fn(f64) -> f64, t: f64, r: f64, n: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut acc = 0.0;
    for k in 0..n {
        let mu = -1.0 + 2.0 * (k as f64 + rng.random::<f64>()) / n as f64;
        let d = (r * r + t * t - 2.0 * r * t * mu).max(0.0).sqrt();
        acc += psi(d);
    }
    t * acc / n as f64
}

/// Mass law, exact shell support and the Monte-Carlo sphere oracle.
pub fn kernel_checks(m: &KernelThresholds, seed: u64) -> Result<Vec<Criterion>> {
    let eps = m.epsilon;
    let t_max = m.mass_times.iter().copied().fold(1.0, f64::max);
    let p = build_mollifier(eps, ChiFamily::Bump)?;
    let k = build_kernel_tables(&p, t_max, eps / 8.0, eps / 8.0)?;
    let s = k.support;
    let mut out = Vec::new();

    let mass = m
        .mass_times
        .iter()
        .map(|&t| (table_mass(&k, t) - t).abs() / t)
        .fold(0.0, f64::max);
    out.push(Criterion::at_most(
        "kernels.mass",
        "max_t |int Y(t) dx - t| / t",
        mass,
        m.mass_rel_tol,
    ));

    // table nodes and random points outside the shell |r - t| < S
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outside: f64 = 0.0;
    for it in 0..k.nt {
        for ir in 0..k.nr {
            let (t, r) = (it as f64 * k.dt, ir as f64 * k.dr);
            if (r - t).abs() >= s {
                outside = outside.max(k.y_node(it, ir).iter().fold(0.0, |a, v| a.max(v.abs())));
            }
        }
    }
    for _ in 0..10_000 {
        let t = rng.random::<f64>() * t_max;
        let r = if rng.random::<bool>() && t > s {
            rng.random::<f64>() * (t - s)
        } else {
            t + s + rng.random::<f64>()
        };
        let (y, yt, yr) = k.radial(t, r);
        outside = outside.max(y.abs()).max(yt.abs()).max(yr.abs());
    }
    out.push(Criterion::at_most(
        "kernels.shell",
        "max |Y| and derivatives outside the 2 eps shell",
        outside,
        m.shell_abs_tol,
    ));

    let psi = |d: f64| p.psi.value(d);
    let mut worst: f64 = 0.0;
    for _ in 0..m.mc_points {
        let t = s + rng.random::<f64>() * (t_max - s);
        let r = (t + (rng.random::<f64>() - 0.5) * s).max(0.0);
        let y = k.eval(t, Vec3::new(r, 0.0, 0.0))?.value;
        let o = sphere_average(&psi, t, r, 200_000, &mut rng);
        worst = worst.max(((y - o) / o).abs());
    }
    out.push(Criterion::at_most(
        "kernels.oracle",
        "max relative gap to the Monte-Carlo sphere average",
        worst,
        m.mc_rel_tol,
    ));
    Ok(out)
}

fn random_point(rng: &mut ChaCha8Rng, a: f64) -> PhasePoint {
    let mut c = [0.0; 6];
    for v in &mut c {
        *v = (2.0 * rng.random::<f64>() - 1.0) * a;
    }
    PhasePoint::new(Vec3::new(c[0], c[1], c[2]), Vec3::new(c[3], c[4], c[5]))
}

fn random_weighted(rng: &mut ChaCha8Rng, n: usize) -> PhaseEnsemble {
    let points = (0..n).map(|_| random_point(rng, 0.6)).collect();
    let mut w: Vec<f64> = (0..n).map(|_| 0.05 + rng.random::<f64>()).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    let rest: f64 = w[1..].iter().sum();
    w[0] = 1.0 - rest;
    PhaseEnsemble { points, weights: w }
}

/// Minimum of the truncated cost over all permutations.
pub fn permutation_minimum(mu: &[PhasePoint], nu: &[PhasePoint]) -> f64 {
    fn go(i: usize, mu: &[PhasePoint], nu: &[PhasePoint], used: &mut [bool], acc: f64, best: &mut f64) {
        if i == mu.len() {
            *best = best.min(acc);
            return;
        }
        for j in 0..nu.len() {
            if !used[j] {
                used[j] = true;
                go(i + 1, mu, nu, used, acc + mu[i].dist(&nu[j]).min(1.0), best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(0, mu, nu, &mut vec![false; nu.len()], 0.0, &mut best);
    best / mu.len() as f64
}

/// Exact solver vs permutation enumeration, and metric axioms.
pub fn transport_checks(m: &TransportThresholds, seed: u64) -> Result<Vec<Criterion>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..m.instances {
        let n = rng.random_range(1..=m.max_atoms);
        // alternate scales so both the linear and the saturated cost occur
        let a = if i % 2 == 0 { 0.3 } else { 1.0 };
        let mu: Vec<PhasePoint> = (0..n).map(|_| random_point(&mut rng, a)).collect();
        let nu: Vec<PhasePoint> = (0..n).map(|_| random_point(&mut rng, a)).collect();
        let (d, _) = mkr_distance(
            &PhaseEnsemble::uniform(mu.clone()),
            &PhaseEnsemble::uniform(nu.clone()),
            MkrMode::Exact,
        )?;
        worst = worst.max((d - permutation_minimum(&mu, &nu)).abs());
    }
    let mut violation: f64 = 0.0;
    for _ in 0..m.triples {
        let sizes: Vec<usize> = (0..3).map(|_| rng.random_range(1..=m.max_atoms)).collect();
        let [a, b, c] = [0, 1, 2].map(|i| random_weighted(&mut rng, sizes[i]));
        let d = |x: &PhaseEnsemble, y: &PhaseEnsemble| mkr_distance(x, y, MkrMode::Exact).map(|r| r.0);
        let (ab, ba, bc, ac, aa) = (d(&a, &b)?, d(&b, &a)?, d(&b, &c)?, d(&a, &c)?, d(&a, &a)?);
        violation = violation
            .max((ab - ba).abs())
            .max(ac - ab - bc)
            .max(aa.abs())
            .max(-ab)
            .max(ab - 1.0);
    }
    Ok(vec![
        Criterion::at_most(
            "transport.exact",
            "max |LP - permutation minimum| on random uniform instances",
            worst,
            m.brute_force_tol,
        ),
        Criterion::at_most(
            "transport.metric",
            "largest violation of symmetry, triangle, identity and range",
            violation,
            m.metric_tol,
        ),
    ])
}

fn terminal_gap(a: &TrajectoryHistory, b: &TrajectoryHistory) -> f64 {
    a.slice(a.steps())
        .iter()
        .zip(b.slice(b.steps()))
        .map(|(p, q)| (p.x - q.x).max_abs().max((p.xi - q.xi).max_abs()))
        .fold(0.0, f64::max)
}

fn node_gap(a: &TrajectoryHistory, b: &TrajectoryHistory) -> f64 {
    let mut m: f64 = 0.0;
    for k in 0..=a.steps() {
        for (p, q) in a.slice(k).iter().zip(b.slice(k)) {
            m = m.max((p.x - q.x).max_abs()).max((p.xi - q.xi).max_abs());
        }
    }
    m
}

/// Picard fixed point vs RK4, and windowed vs brute-force force paths.
pub fn oracle_checks(m: &OracleThresholds, epsilon: f64, seed: u64) -> Result<Vec<Criterion>> {
    let p = build_mollifier(epsilon, ChiFamily::Bump)?;
    let k = build_kernel_tables(&p, m.t_end, epsilon / 8.0, epsilon / 8.0)?;
    let init = sample_cloud(m.n, 0.5, 0.5, seed);
    let dt = epsilon / 8.0;
    let picard_tol = 1e-12;
    let cfg = |dt: f64| SimConfig::new(epsilon, dt, m.t_end, m.n);
    let coarse = reference_flow(&init, &k, &cfg(dt))?.history;
    let fine = reference_flow(&init, &k, &cfg(dt / 2.0))?.history;
    let pic = picard_solve(&init, &k, &cfg(dt), 200, picard_tol)?;
    let quad = terminal_gap(&coarse, &fine).max(picard_tol);
    let converged = pic.report.as_ref().is_some_and(|r| r.converged);
    let d = terminal_gap(&pic.history, &coarse);

    let mut brute = cfg(dt);
    brute.force_path = ForcePath::Brute;
    let b = simulate(&brute, &k, &init)?;
    let w = simulate(&cfg(dt), &k, &init)?;
    Ok(vec![
        Criterion::holds(
            "oracle.picard",
            "terminal |Picard - RK4| over the RK4 step-halving gap",
            d / quad,
            &format!("<= {} and converged", m.picard_factor),
            converged && d <= m.picard_factor * quad,
        ),
        Criterion::at_most(
            "oracle.windowed",
            "max node gap between windowed and brute-force force paths",
            node_gap(&w, &b),
            m.windowed_tol,
        ),
    ])
}

//! Kernel construction checked against independent oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use vmreg::kernels::{
    build_kernel_tables, build_mollifier, build_mollifier_named, y_derivs, ChiFamily, KernelFamily,
    RadialKernel,
};
use vmreg::quadrature::integrate;
use vmreg::{Error, Vec3};

/// Unit-scale bump `exp(-1/(1-u^2))` normalized by its own 1-D quadrature.
fn bump_eps(eps: f64) -> impl Fn(f64) -> f64 {
    let raw = |u: f64| if u < 1.0 { (-1.0 / (1.0 - u * u)).exp() } else { 0.0 };
    let z = 4.0 * PI * integrate(|u| u * u * raw(u), 0.0, 1.0, 1e-15);
    move |r: f64| raw(r / eps) / (z * eps.powi(3))
}

#[test]
fn psi_unit_mass_and_support() {
    let p = build_mollifier(0.1, ChiFamily::Bump).unwrap();
    let m = 4.0 * PI * integrate(|u| u * u * p.psi.value(u), 0.0, 0.2, 1e-14);
    assert!((m - 1.0).abs() < 1e-10, "{m}");
    assert_eq!(p.psi.value(0.25), 0.0);
    assert_eq!(p.psi.value(0.2), 0.0);
    let mc = 4.0 * PI * integrate(|u| u * u * p.chi.value(u), 0.0, 0.1, 1e-14);
    assert!((mc - 1.0).abs() < 1e-10);
}

#[test]
fn psi_matches_jittered_monte_carlo_convolution() {
    // psi(r) = int chi(y) chi(d - y) dy over the cube [-eps, eps]^3,
    // one jittered sample per cell of a 216^3 grid (~1e7 samples).
    let eps = 0.1;
    let chi = bump_eps(eps);
    let p = build_mollifier(eps, ChiFamily::Bump).unwrap();
    let r = 0.05;
    let n = 216usize;
    let h = 2.0 * eps / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut acc = 0.0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let y = [
                    -eps + (a as f64 + rng.random::<f64>()) * h,
                    -eps + (b as f64 + rng.random::<f64>()) * h,
                    -eps + (c as f64 + rng.random::<f64>()) * h,
                ];
                let ry = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
                if ry >= eps {
                    continue;
                }
                let dy = ((r - y[0]).powi(2) + y[1] * y[1] + y[2] * y[2]).sqrt();
                acc += chi(ry) * chi(dy);
            }
        }
    }
    let mc = acc * h * h * h;
    let v = p.psi.value(r);
    assert!(((v - mc) / mc).abs() < 1e-4, "psi {v} mc {mc}");
}

#[test]
fn unknown_family_and_bad_epsilon_are_rejected() {
    assert!(matches!(
        build_mollifier_named(0.1, "gaussian"),
        Err(Error::UnknownFamily(_))
    ));
    assert!(matches!(
        build_mollifier(0.0, ChiFamily::Bump),
        Err(Error::NonPositiveEpsilon(_))
    ));
    assert!(matches!(
        build_mollifier(-1.0, ChiFamily::Bump),
        Err(Error::NonPositiveEpsilon(_))
    ));
    assert!(build_mollifier_named(0.1, "polynomial").is_ok());
}

fn kernel(eps: f64, t_max: f64) -> RadialKernel {
    let p = build_mollifier(eps, ChiFamily::Bump).unwrap();
    build_kernel_tables(&p, t_max, eps / 8.0, eps / 8.0).unwrap()
}

#[test]
fn table_construction_rejects_bad_grids() {
    let p = build_mollifier(0.1, ChiFamily::Bump).unwrap();
    assert!(matches!(
        build_kernel_tables(&p, 1.0, 0.06, 0.01),
        Err(Error::GridTooCoarse { .. })
    ));
    assert!(matches!(
        build_kernel_tables(&p, 1.0, 0.01, 0.06),
        Err(Error::GridTooCoarse { .. })
    ));
    assert!(build_kernel_tables(&p, 0.0, 0.01, 0.01).is_err());
}

#[test]
fn support_shell_is_exact() {
    let k = kernel(0.1, 2.0);
    assert_eq!(k.eval(1.0, Vec3::new(1.35, 0.0, 0.0)).unwrap().value, 0.0);
    for it in 0..k.nt {
        let t = it as f64 * k.dt;
        for ir in 0..k.nr {
            let r = ir as f64 * k.dr;
            if (r - t).abs() > 0.2 && r + t > 0.2 {
                let (y, yt, yr) = k.radial(t, r);
                assert_eq!((y, yt, yr), (0.0, 0.0, 0.0), "t={t} r={r}");
            }
        }
    }
}

/// `int Y(t, x) dx` from the interpolated table by panel-wise adaptive
/// quadrature in `r`.
fn table_mass(k: &RadialKernel, t: f64) -> f64 {
    let lo = (t - k.support).max(0.0);
    let hi = t + k.support;
    let mut m = 0.0;
    let panels = 64;
    for p in 0..panels {
        let a = lo + (hi - lo) * p as f64 / panels as f64;
        let b = lo + (hi - lo) * (p + 1) as f64 / panels as f64;
        m += integrate(|r| 4.0 * PI * r * r * k.radial(t, r).0, a, b, 1e-13);
    }
    m
}

#[test]
fn mass_law_holds_on_the_table() {
    let k = kernel(0.1, 2.0);
    for t in [0.5, 1.0, 2.0] {
        let m = table_mass(&k, t);
        assert!((m - t).abs() <= 1e-3 * t, "t={t} mass={m}");
    }
}

#[test]
fn kernel_is_nonnegative_on_grid() {
    let k = kernel(0.1, 1.0);
    for it in 0..k.nt {
        for ir in 0..k.nr {
            assert!(k.y_node(it, ir)[0] >= 0.0);
        }
    }
}

/// `Y(t, r) = t * mean over the unit sphere of psi(|x - t w|)`, by a
/// jittered stratification in `(cos theta, phi)`.
fn sphere_oracle(psi: &dyn Fn(f64) -> f64, t: f64, r: f64, rng: &mut ChaCha8Rng) -> f64 {
    // only the polar angle matters; stratify cos(theta) finely
    let n = 200_000;
    let mut acc = 0.0;
    for k in 0..n {
        let mu = -1.0 + 2.0 * (k as f64 + rng.random::<f64>()) / n as f64;
        let d = (r * r + t * t - 2.0 * r * t * mu).max(0.0).sqrt();
        acc += psi(d);
    }
    t * acc / n as f64
}

#[test]
fn kernel_matches_sphere_mollification() {
    let eps = 0.1;
    let p = build_mollifier(eps, ChiFamily::Bump).unwrap();
    let k = build_kernel_tables(&p, 1.0, eps / 8.0, eps / 8.0).unwrap();
    let psi = |d: f64| p.psi.value(d);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let y = k.eval(0.5, Vec3::new(0.5, 0.0, 0.0)).unwrap().value;
    let o = sphere_oracle(&psi, 0.5, 0.5, &mut rng);
    assert!(((y - o) / o).abs() < 1e-3, "{y} vs {o}");
}

#[test]
fn eval_examples() {
    let k = kernel(0.1, 1.0);
    let s = k.eval(0.5, Vec3::ZERO).unwrap();
    assert_eq!(s.value, 0.0);
    assert_eq!(s.grad, Vec3::ZERO);
    for d in [0.0, 0.05, 0.13, 0.2] {
        let s = k.eval(0.0, Vec3::new(0.0, d, 0.0)).unwrap();
        assert!(s.value.abs() < 1e-14, "{d}: {}", s.value);
    }
    assert!(matches!(
        k.eval(1.5, Vec3::ZERO),
        Err(Error::OutOfRange { .. })
    ));
    assert!(k.eval(-0.1, Vec3::ZERO).is_err());
}

#[test]
fn eval_matches_finite_differences_of_closed_form() {
    let eps = 0.1;
    let p = build_mollifier(eps, ChiFamily::Bump).unwrap();
    // interpolated derivatives converge like h^3; eps/64 meets the 1e-5 budget
    let k = build_kernel_tables(&p, 0.3, eps / 64.0, eps / 64.0).unwrap();
    let (t, r) = (0.2, 0.19);
    let s = k.eval(t, Vec3::new(r, 0.0, 0.0)).unwrap();
    let y = |t: f64, r: f64| y_derivs(&p.psi, t, r).y;
    let h = 1e-5;
    let fd_t = (y(t + h, r) - y(t - h, r)) / (2.0 * h);
    let fd_r = (y(t, r + h) - y(t, r - h)) / (2.0 * h);
    assert!((s.value - y(t, r)).abs() < 1e-5 * y(t, r).abs(), "{} {}", s.value, y(t, r));
    assert!((s.dt - fd_t).abs() < 1e-5 * fd_t.abs().max(1.0), "{} {fd_t}", s.dt);
    assert!((s.grad[0] - fd_r).abs() < 1e-5 * fd_r.abs().max(1.0), "{} {fd_r}", s.grad[0]);
    assert_eq!(s.grad[1], 0.0);
}

#[test]
fn interpolated_gradients_match_differences_of_interpolant() {
    let k = kernel(0.1, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let scale = (0..k.nt)
        .flat_map(|it| (0..k.nr).map(move |ir| (it, ir)))
        .map(|(it, ir)| {
            let n = k.y_node(it, ir);
            n[1].abs().max(n[2].abs())
        })
        .fold(0.0, f64::max);
    let h = 1e-6;
    for _ in 0..1000 {
        let t = rng.random_range(0.01..0.99);
        let r = rng.random_range(0.01..1.2);
        let (_, yt, yr) = k.radial(t, r);
        let ft = (k.radial(t + h, r).0 - k.radial(t - h, r).0) / (2.0 * h);
        let fr = (k.radial(t, r + h).0 - k.radial(t, r - h).0) / (2.0 * h);
        assert!((yt - ft).abs() <= 1e-4 * scale, "t={t} r={r}: {yt} {ft}");
        assert!((yr - fr).abs() <= 1e-4 * scale, "t={t} r={r}: {yr} {fr}");
    }
}

#[test]
fn wave_equation_residual_is_small_away_from_the_source() {
    let k = kernel(0.1, 1.0);
    let (ht, hr) = (k.dt, k.dr);
    let y = |it: usize, ir: usize| k.y_node(it, ir)[0];
    let mut d2max: f64 = 0.0;
    let mut res: f64 = 0.0;
    for it in 1..k.nt - 1 {
        let t = it as f64 * ht;
        for ir in 1..k.nr - 1 {
            let r = ir as f64 * hr;
            let ytt = (y(it + 1, ir) - 2.0 * y(it, ir) + y(it - 1, ir)) / (ht * ht);
            let yrr = (y(it, ir + 1) - 2.0 * y(it, ir) + y(it, ir - 1)) / (hr * hr);
            let yr = (y(it, ir + 1) - y(it, ir - 1)) / (2.0 * hr);
            d2max = d2max.max(ytt.abs()).max(yrr.abs());
            if t > 2.0 * k.epsilon {
                res = res.max((ytt - yrr - 2.0 * yr / r).abs());
            }
        }
    }
    assert!(res <= 1e-2 * d2max, "residual {res} vs {d2max}");
}

#[test]
fn initial_layer_examples() {
    let k = kernel(0.1, 1.0);
    assert_eq!(k.eval_initial_layer(0.5, Vec3::ZERO).unwrap(), Vec3::ZERO);
    let inside = k.eval_initial_layer(0.5, Vec3::new(0.2, 0.0, 0.0)).unwrap();
    assert!(inside.norm() <= 1e-12);
    let ahead = k.eval_initial_layer(0.5, Vec3::new(1.0, 0.0, 0.0)).unwrap();
    assert!((ahead[0] - 0.0795775).abs() < 1e-6, "{}", ahead[0]);
    assert!(ahead[1].abs() < 1e-15 && ahead[2].abs() < 1e-15);
    assert!(k.eval_initial_layer(1.2, Vec3::ZERO).is_err());
}

#[test]
fn initial_layer_matches_coulomb_and_vanishes_behind_the_wave() {
    let k = kernel(0.1, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..500 {
        let t = rng.random_range(0.0..1.0);
        let dir = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.3);
        let dir = dir / dir.norm();
        let ahead = t + 0.2 + rng.random_range(1e-6..1.0);
        let m = k.eval_initial_layer(t, dir * ahead).unwrap();
        let coulomb = dir / (4.0 * PI * ahead * ahead);
        assert!((m - coulomb).max_abs() <= 1e-6);
        if t > 0.2 {
            let behind = rng.random_range(0.0..t - 0.2);
            let m = k.eval_initial_layer(t, dir * behind).unwrap();
            assert!(m.max_abs() <= 1e-12);
        }
    }
}

#[test]
fn initial_layer_is_continuous_across_the_shell() {
    // the tabulated interior must meet the analytic exterior
    let k = kernel(0.1, 1.0);
    let t = 0.5;
    for r in [0.3, 0.7] {
        let a = k.eval_initial_potential(t, Vec3::new(r - 1e-9, 0.0, 0.0)).unwrap();
        let b = k.eval_initial_potential(t, Vec3::new(r + 1e-9, 0.0, 0.0)).unwrap();
        assert!((a - b).abs() < 1e-7, "r={r}: {a} {b}");
    }
}

#[test]
fn lipschitz_estimate_examples() {
    let k = kernel(0.1, 1.0);
    assert_eq!(k.zeroed().lipschitz_estimate(1.0).unwrap(), 0.0);
    assert!(k.lipschitz_estimate(1.5).is_err());

    let p = build_mollifier(0.1, ChiFamily::Bump).unwrap();
    let bound = k.lipschitz_estimate(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut sampled: f64 = 0.0;
    for _ in 0..1000 {
        let it = rng.random_range(0..k.nt);
        let ir = rng.random_range(0..k.nr);
        let d = y_derivs(&p.psi, it as f64 * k.dt, ir as f64 * k.dr);
        sampled = sampled.max(d.ytr.abs());
    }
    assert!(bound >= sampled, "{bound} < {sampled}");

    let coarse = kernel(0.2, 1.0).lipschitz_estimate(1.0).unwrap();
    assert!(bound > coarse, "{bound} <= {coarse}");
}

#[test]
fn single_family_has_half_the_support() {
    let p = build_mollifier(0.2, ChiFamily::Bump).unwrap();
    let k = RadialKernel::build(&p, KernelFamily::Single, 1.0, 0.025, 0.025).unwrap();
    assert!((k.support - 0.2).abs() < 1e-15);
    assert_eq!(k.eval(0.5, Vec3::new(0.75, 0.0, 0.0)).unwrap().value, 0.0);
    assert!(table_mass(&k, 0.5) > 0.499);
}

#[test]
fn binary_round_trip() {
    let k = kernel(0.2, 1.0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.vmkr");
    k.save(&path).unwrap();
    let l = RadialKernel::load(&path).unwrap();
    assert_eq!(l.nt, k.nt);
    assert_eq!(l.epsilon, k.epsilon);
    let d = Vec3::new(0.3, 0.4, 0.1);
    assert_eq!(l.eval(0.5, d).unwrap(), k.eval(0.5, d).unwrap());
    assert!(vmreg::kernels::io::sidecar_path(&path).exists());
    let mut bytes = std::fs::read(&path).unwrap();
    bytes[0] = b'X';
    assert!(RadialKernel::from_bytes(&bytes).is_err());
}

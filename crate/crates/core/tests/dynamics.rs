// oracle values are written out as literals on purpose
#![allow(clippy::approx_constant)]

//! Particle dynamics: forces, stepping and whole runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use vmreg::dynamics::io as hio;
use vmreg::dynamics::{
    force_on_particle, kinematics, sample_cloud, simulate, ForcePath, NodeState, PhaseEnsemble,
    PhasePoint, SimConfig, TrajectoryHistory,
};
use vmreg::kernels::{build_kernel_tables, build_mollifier, ChiFamily, RadialKernel};
use vmreg::transport::{mkr_distance, MkrMode};
use vmreg::{Error, Exec, Vec3};

fn kernel(eps: f64, t_max: f64) -> RadialKernel {
    let p = build_mollifier(eps, ChiFamily::Bump).unwrap();
    build_kernel_tables(&p, t_max, eps / 8.0, eps / 8.0).unwrap()
}

/// History in which every particle rests at its initial position.
fn frozen(points: &[Vec3], dt: f64, steps: usize) -> TrajectoryHistory {
    let states: Vec<NodeState> = points
        .iter()
        .map(|&x| NodeState::new(x, Vec3::ZERO, Vec3::ZERO, Vec3::ZERO))
        .collect();
    let w = vec![1.0 / points.len() as f64; points.len()];
    let mut h = TrajectoryHistory::new(dt, w, states.clone()).unwrap();
    for _ in 0..steps {
        h.push(states.clone()).unwrap();
    }
    h
}

#[test]
fn kinematics_examples() {
    let k = kinematics(Vec3::new(1.0, 0.0, 0.0));
    assert!((k.v[0] - 0.707_106_8).abs() < 1e-7);
    assert!((k.e - 1.414_213_6).abs() < 1e-7);
    let r = kinematics(Vec3::ZERO);
    assert_eq!(r.e, 1.0);
    assert_eq!(r.v, Vec3::ZERO);
    for a in 0..3 {
        for b in 0..3 {
            assert_eq!(r.dv[a][b], if a == b { 1.0 } else { 0.0 });
        }
    }
}

#[test]
fn resting_particle_feels_no_force() {
    let k = kernel(0.1, 1.0);
    let h = frozen(&[Vec3::ZERO], 0.025, 40);
    let c = SimConfig::new(0.1, 0.025, 1.0, 1);
    for t in [0.0, 0.3, 0.5125, 1.0] {
        let f = force_on_particle(0, t, &h, &k, &c).unwrap();
        assert!(f.max_abs() <= 1e-12, "t={t}: {f:?}");
    }
}

#[test]
fn static_pair_feels_the_coulomb_layer() {
    let k = kernel(0.1, 1.0);
    let h = frozen(&[Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)], 0.025, 12);
    let c = SimConfig::new(0.1, 0.025, 0.3, 2);
    let f0 = force_on_particle(0, 0.3, &h, &k, &c).unwrap();
    let f1 = force_on_particle(1, 0.3, &h, &k, &c).unwrap();
    let expect = 0.5 / (4.0 * PI);
    assert!((f0[0] + expect).abs() < 1e-5, "{f0:?}");
    assert!((f1[0] - expect).abs() < 1e-5, "{f1:?}");
    assert!(f0[1].abs() < 1e-15 && f1[2].abs() < 1e-15);
}

#[test]
fn force_query_errors() {
    let k = kernel(0.2, 0.5);
    let h = frozen(&[Vec3::ZERO], 0.05, 4);
    let c = SimConfig::new(0.2, 0.05, 0.2, 1);
    assert!(matches!(
        force_on_particle(0, 0.3, &h, &k, &c),
        Err(Error::HistoryTooShort { .. })
    ));
    assert!(force_on_particle(3, 0.1, &h, &k, &c).is_err());
}

fn cloud_config(n: usize, dt: f64, t_end: f64, seed: u64) -> SimConfig {
    let mut c = SimConfig::new(0.2, dt, t_end, n);
    c.seed = seed;
    c
}

#[test]
fn windowed_and_brute_paths_agree() {
    let k = kernel(0.2, 1.0);
    let mut c = cloud_config(8, 0.05, 1.0, 3);
    let init = c.initial_ensemble().unwrap();
    let h = simulate(&c, &k, &init).unwrap();
    let mut worst: f64 = 0.0;
    for t in [1.0, 0.975, 0.5, 0.3333] {
        for i in 0..8 {
            c.force_path = ForcePath::Windowed;
            let a = force_on_particle(i, t, &h, &k, &c).unwrap();
            c.force_path = ForcePath::Brute;
            let b = force_on_particle(i, t, &h, &k, &c).unwrap();
            worst = worst.max((a - b).max_abs());
        }
    }
    assert!(worst <= 1e-8, "{worst}");
}

#[test]
fn resting_particle_stays_put() {
    let k = kernel(0.2, 0.5);
    let c = SimConfig::new(0.2, 0.05, 0.5, 1);
    let init = PhaseEnsemble::uniform(vec![PhasePoint::new(Vec3::new(0.3, -0.2, 0.1), Vec3::ZERO)]);
    let h = simulate(&c, &k, &init).unwrap();
    assert_eq!(h.steps(), 10);
    for k in 0..=h.steps() {
        let s = h.node(k, 0);
        assert!((s.x - Vec3::new(0.3, -0.2, 0.1)).max_abs() <= 1e-14);
        assert!(s.xi.max_abs() <= 1e-14);
    }
}

#[test]
fn zero_length_run_keeps_the_initial_data() {
    let k = kernel(0.2, 0.5);
    let c = SimConfig::new(0.2, 0.05, 0.0, 4);
    let init = sample_cloud(4, 1.0, 0.5, 1);
    let h = simulate(&c, &k, &init).unwrap();
    assert_eq!(h.steps(), 0);
    for (i, p) in init.points.iter().enumerate() {
        assert_eq!(h.node(0, i).x, p.x);
        assert_eq!(h.node(0, i).xi, p.xi);
    }
}

#[test]
fn runs_are_deterministic_and_exec_independent() {
    let k = kernel(0.2, 0.5);
    let mut c = cloud_config(6, 0.05, 0.5, 11);
    let init = c.initial_ensemble().unwrap();
    let a = simulate(&c, &k, &init).unwrap();
    let b = simulate(&c, &k, &init).unwrap();
    assert_eq!(a, b);
    c.exec = Exec::Sequential;
    let s = simulate(&c, &k, &init).unwrap();
    assert_eq!(a, s);
}

#[test]
fn mirror_images_stay_mirrored() {
    let k = kernel(0.2, 1.0);
    let c = SimConfig::new(0.2, 0.05, 1.0, 2);
    let x = Vec3::new(0.3, 0.1, -0.2);
    let xi = Vec3::new(0.2, -0.3, 0.1);
    let init = PhaseEnsemble::uniform(vec![PhasePoint::new(x, xi), PhasePoint::new(-x, -xi)]);
    let h = simulate(&c, &k, &init).unwrap();
    for k in 0..=h.steps() {
        let (a, b) = (h.node(k, 0), h.node(k, 1));
        assert!((a.x + b.x).max_abs() <= 1e-10);
        assert!((a.xi + b.xi).max_abs() <= 1e-10);
    }
}

#[test]
fn translations_commute_with_the_flow() {
    let k = kernel(0.2, 1.0);
    let c = cloud_config(5, 0.05, 1.0, 4);
    let init = c.initial_ensemble().unwrap();
    let shift = Vec3::new(0.7, -1.3, 2.1);
    let a = simulate(&c, &k, &init).unwrap();
    let b = simulate(&c, &k, &init.translated(shift)).unwrap();
    for k in 0..=a.steps() {
        for i in 0..5 {
            assert!((a.node(k, i).x + shift - b.node(k, i).x).max_abs() <= 1e-10);
            assert!((a.node(k, i).xi - b.node(k, i).xi).max_abs() <= 1e-10);
        }
    }
}

#[test]
fn velocities_stay_subluminal() {
    let k = kernel(0.2, 1.0);
    let c = cloud_config(8, 0.05, 1.0, 9);
    let h = simulate(&c, &k, &c.initial_ensemble().unwrap()).unwrap();
    for k in 0..=h.steps() {
        for s in h.slice(k) {
            assert!(s.vel.norm() < 1.0);
        }
    }
}

fn terminal_gap(coarse: &TrajectoryHistory, fine: &TrajectoryHistory) -> f64 {
    let a = coarse.slice(coarse.steps());
    let b = fine.slice(fine.steps());
    a.iter()
        .zip(b)
        .map(|(p, q)| (p.x - q.x).max_abs().max((p.xi - q.xi).max_abs()))
        .fold(0.0, f64::max)
}

#[test]
fn step_refinement_shows_third_order_or_better() {
    // Table error must sit below the step error being measured.
    let p = build_mollifier(0.2, ChiFamily::Bump).unwrap();
    let k = build_kernel_tables(&p, 0.5, 0.2 / 32.0, 0.2 / 32.0).unwrap();
    let init = sample_cloud(4, 0.5, 0.5, 21);
    let run = |dt: f64| simulate(&SimConfig::new(0.2, dt, 0.5, 4), &k, &init).unwrap();
    let (a, b, c) = (run(0.05), run(0.025), run(0.0125));
    let ratio = terminal_gap(&a, &b) / terminal_gap(&b, &c);
    assert!((8.0..=32.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn sixteen_particle_run_is_converged_in_dt() {
    let k = kernel(0.2, 1.0);
    let init = sample_cloud(16, 1.0, 0.5, 2);
    let run = |dt: f64| simulate(&SimConfig::new(0.2, dt, 1.0, 16), &k, &init).unwrap();
    let a = run(0.05);
    let b = run(0.025);
    let (d, _) = mkr_distance(
        &a.ensemble_at(a.steps()),
        &b.ensemble_at(b.steps()),
        MkrMode::Exact,
    )
    .unwrap();
    assert!(d <= 1e-4, "{d}");
}

#[test]
fn configuration_errors_are_reported() {
    let k = kernel(0.2, 0.5);
    let init = sample_cloud(3, 1.0, 0.5, 1);
    // kernel horizon too short
    assert!(simulate(&SimConfig::new(0.2, 0.05, 1.0, 3), &k, &init).is_err());
    // epsilon mismatch
    assert!(simulate(&SimConfig::new(0.1, 0.025, 0.5, 3), &k, &init).is_err());
    // non-uniform weights need the mean-field entry point
    let w = PhaseEnsemble::weighted(init.points.clone(), vec![0.5, 0.25, 0.25]).unwrap();
    assert!(simulate(&SimConfig::new(0.2, 0.05, 0.5, 3), &k, &w).is_err());
}

#[test]
fn history_files_round_trip() {
    let k = kernel(0.2, 0.5);
    let c = cloud_config(3, 0.05, 0.5, 5);
    let h = simulate(&c, &k, &c.initial_ensemble().unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("run.vmhs");
    h.save(&p).unwrap();
    let back = TrajectoryHistory::load(&p).unwrap();
    for k in 0..=h.steps() {
        for i in 0..3 {
            assert_eq!(back.node(k, i).x, h.node(k, i).x);
            assert_eq!(back.node(k, i).xi, h.node(k, i).xi);
        }
    }
    let e = hio::load_ensemble(&p, Some(0.25)).unwrap();
    assert_eq!(e.len(), 3);
    let csv = dir.path().join("e.csv");
    hio::write_ensemble_csv(&e, &csv).unwrap();
    let again = hio::load_ensemble(&csv, None).unwrap();
    assert!((again.points[1].x - e.points[1].x).max_abs() < 1e-15);
}

#[test]
fn random_jacobians_match_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let xi = Vec3::new(
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
        );
        let k = kinematics(xi);
        let h = 1e-6;
        for b in 0..3 {
            let mut e = Vec3::ZERO;
            e.0[b] = h;
            let d = (kinematics(xi + e).v - kinematics(xi - e).v) / (2.0 * h);
            for a in 0..3 {
                assert!((k.dv[a][b] - d[a]).abs() < 1e-6);
            }
        }
    }
}

//! Field reconstruction, pseudo-energy, energy exchange and gauge checks.

use std::f64::consts::PI;
use vmreg::dynamics::{force_on_particle, sample_cloud, simulate, velocity, NodeState, PhaseEnsemble, PhasePoint, SimConfig, TrajectoryHistory};
use vmreg::fields::{
    energy_exchange, field_eval, gauge_defect, gauge_residual, kinetic_energy, pseudo_energy, FieldGrid, GridSpec,
};
use vmreg::kernels::{build_kernel_tables, build_mollifier, build_single_kernel_tables, ChiFamily, RadialKernel};
use vmreg::{Error, Exec, Vec3};

fn kernel(eps: f64, t_max: f64) -> RadialKernel {
    let p = build_mollifier(eps, ChiFamily::Bump).unwrap();
    build_kernel_tables(&p, t_max, eps / 8.0, eps / 8.0).unwrap()
}

fn single(eps: f64, t_max: f64) -> RadialKernel {
    let p = build_mollifier(eps, ChiFamily::Bump).unwrap();
    build_single_kernel_tables(&p, t_max, eps / 8.0, eps / 8.0).unwrap()
}

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

fn coulomb(x: Vec3) -> Vec3 {
    x / (4.0 * PI * x.norm().powi(3))
}

fn moving_cloud(n: usize, t: f64) -> (RadialKernel, TrajectoryHistory) {
    let k = kernel(0.2, t);
    let h = simulate(&SimConfig::new(0.2, 0.05, t, n), &k, &sample_cloud(n, 0.5, 0.5, 41)).unwrap();
    (k, h)
}

#[test]
fn resting_particle_keeps_its_coulomb_field_far_away() {
    let k = kernel(0.2, 0.5);
    let h = frozen(&[Vec3::ZERO], 0.05, 10);
    let pts = [Vec3::new(1.5, 0.0, 0.0), Vec3::new(-0.7, 0.9, 0.4), Vec3::new(0.0, 0.0, -2.5)];
    for (p, s) in pts.iter().zip(field_eval(&h, &k, 0.5, &pts).unwrap()) {
        assert!((s.e - coulomb(*p)).max_abs() <= 1e-6, "{p:?}: {:?}", s.e);
        assert_eq!(s.b, Vec3::ZERO);
        assert_eq!(s.a, Vec3::ZERO);
    }
}

#[test]
fn far_field_is_the_initial_coulomb_field() {
    let t = 0.4;
    let (k, h) = moving_cloud(6, t);
    let x0: Vec<Vec3> = h.slice(0).iter().map(|s| s.x).collect();
    let r0 = x0.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let reach = r0 + t + 2.0 * 0.2;
    let pts: Vec<Vec3> = [[1.0, 0.2, -0.3], [-0.4, -1.0, 0.5], [0.1, 0.3, 1.0]]
        .iter()
        .map(|d| Vec3(*d) * ((reach + 0.1) / Vec3(*d).norm()))
        .collect();
    for (p, s) in pts.iter().zip(field_eval(&h, &k, t, &pts).unwrap()) {
        let expect = x0.iter().fold(Vec3::ZERO, |acc, xj| acc + coulomb(*p - *xj)) / 6.0;
        assert!((s.e - expect).max_abs() <= 1e-6, "{:?} vs {:?}", s.e, expect);
        assert_eq!(s.b, Vec3::ZERO);
    }
}

#[test]
fn lorentz_force_matches_the_particle_force() {
    let t = 0.3;
    let (k, h) = moving_cloud(8, t);
    let cfg = SimConfig::new(0.2, 0.05, t, 8);
    for tq in [t, 0.2, 0.1375] {
        let states: Vec<NodeState> = (0..8).map(|i| h.state_at(i, tq).unwrap()).collect();
        let pts: Vec<Vec3> = states.iter().map(|s| s.x).collect();
        let fs = field_eval(&h, &k, tq, &pts).unwrap();
        for (i, (s, f)) in states.iter().zip(&fs).enumerate() {
            let lorentz = f.e + velocity(s.xi).cross(f.b);
            let direct = force_on_particle(i, tq, &h, &k, &cfg).unwrap();
            assert!((lorentz - direct).max_abs() <= 1e-6, "t={tq} i={i}");
        }
    }
}

#[test]
fn magnetic_field_is_discretely_solenoidal() {
    let t = 0.3;
    let (k, h) = moving_cloud(8, t);
    // h = eps / 8: centered differences resolve the 2 eps shell
    let spec = GridSpec::new(Vec3::ZERO, 0.6, 0.025).unwrap();
    let g = FieldGrid::evaluate(&h, &k, t, spec, Exec::default()).unwrap();
    assert!(g.b_max() > 0.0);
    assert!(g.div_b_max() <= 5e-2 * g.b_max(), "div {} |B| {}", g.div_b_max(), g.b_max());
}

#[test]
fn static_kinetic_energy_is_one() {
    let k = single(0.2, 0.5);
    let h = frozen(&[Vec3::ZERO, Vec3::new(0.3, 0.0, 0.0), Vec3::new(0.0, -0.2, 0.1)], 0.05, 4);
    assert_eq!(kinetic_energy(&h, 0.0).unwrap(), 1.0);
    let spec = GridSpec::auto(&h, 0.2, 0.0, 0.1, 0.2).unwrap();
    let w = pseudo_energy(&h, &k, 0.0, spec).unwrap();
    assert_eq!(w.kinetic, 1.0);
    assert!(w.field > 0.0 && w.tail > 0.0);
    assert!((w.total - w.kinetic - w.field).abs() < 1e-15);
}

#[test]
fn field_energy_is_grid_converged() {
    let k = single(0.2, 0.5);
    let h = frozen(&[Vec3::new(-0.1, 0.0, 0.0), Vec3::new(0.1, 0.05, 0.0)], 0.05, 10);
    let at = |hh: f64| {
        let spec = GridSpec::auto(&h, 0.2, 0.5, hh, 0.0).unwrap();
        pseudo_energy(&h, &k, 0.5, spec).unwrap().field
    };
    let (coarse, fine) = (at(0.1), at(0.05));
    assert!((coarse - fine).abs() <= 5e-3 * fine, "{coarse} {fine}");
}

#[test]
fn energy_needs_the_single_kernel_and_a_large_box() {
    let h = frozen(&[Vec3::ZERO], 0.05, 4);
    let spec = GridSpec::new(Vec3::ZERO, 2.0, 0.2).unwrap();
    assert!(matches!(
        pseudo_energy(&h, &kernel(0.2, 0.5), 0.1, spec),
        Err(Error::WrongKernelFamily { .. })
    ));
    let small = GridSpec::new(Vec3::ZERO, 0.3, 0.05).unwrap();
    match pseudo_energy(&h, &single(0.2, 0.5), 0.2, small) {
        Err(Error::BoxTooSmall { required, .. }) => assert!((required - 0.6).abs() < 1e-12),
        other => panic!("{other:?}"),
    }
}

#[test]
fn static_configuration_exchanges_no_energy() {
    let k = single(0.2, 0.5);
    let h = frozen(&[Vec3::ZERO, Vec3::new(0.4, 0.0, 0.0)], 0.05, 6);
    let spec = GridSpec::auto(&h, 0.2, 0.2, 0.05, 0.0).unwrap();
    let x = energy_exchange(&h, &k, 0.2, spec, Exec::default()).unwrap();
    assert!(x.residual <= 1e-10);
    assert_eq!(x.work, 0.0);
}

#[test]
fn repelling_pair_gains_kinetic_energy_from_the_field() {
    let eps = 0.2;
    let t_end = 0.5;
    let kd = kernel(eps, t_end);
    let ks = single(eps, t_end);
    let init = PhaseEnsemble::uniform(vec![
        PhasePoint::new(Vec3::new(-0.15, 0.0, 0.0), Vec3::ZERO),
        PhasePoint::new(Vec3::new(0.15, 0.0, 0.0), Vec3::ZERO),
    ]);
    let h = simulate(&SimConfig::new(eps, 0.025, t_end, 2), &kd, &init).unwrap();
    let spec = GridSpec::auto(&h, eps, t_end, eps / 4.0, 0.0).unwrap();
    let mut last = 0.0;
    for k in [2, 6, 10, 14, 18] {
        let x = energy_exchange(&h, &ks, h.time(k), spec, Exec::default()).unwrap();
        assert!(x.kinetic_rate > 0.0 && x.work > 0.0, "{x:?}");
        assert!(x.residual <= 0.1 * x.kinetic_rate, "{x:?}");
        last = x.kinetic_rate;
    }
    assert!(last > 0.0);
}

#[test]
fn empty_ensemble_has_no_gauge_defect() {
    let k = kernel(0.2, 0.5);
    let mut h = TrajectoryHistory::new(0.05, vec![], vec![]).unwrap();
    for _ in 0..4 {
        h.push(vec![]).unwrap();
    }
    let spec = GridSpec::new(Vec3::ZERO, 0.5, 0.1).unwrap();
    let g = gauge_defect(&h, &k, 0.1, spec, Exec::default()).unwrap();
    assert_eq!((g.defect, g.scale, g.normalized), (0.0, 0.0, 0.0));
}

#[test]
fn resting_particle_satisfies_the_gauge_to_the_floor() {
    let k = kernel(0.2, 0.5);
    let h = frozen(&[Vec3::ZERO], 0.025, 20);
    let spec = GridSpec::new(Vec3::ZERO, 0.6, 0.05).unwrap();
    let r = gauge_residual(&h, &k, 0.25, spec).unwrap();
    assert!(r <= 1e-8, "normalized gauge residual {r:e}");
}

#[test]
fn moving_cloud_satisfies_the_gauge_to_discretization() {
    let eps = 0.2;
    let k = kernel(eps, 0.3);
    let h = simulate(&SimConfig::new(eps, eps / 8.0, 0.3, 8), &k, &sample_cloud(8, 0.5, 0.5, 41)).unwrap();
    let spec = GridSpec::new(Vec3::ZERO, 0.8, eps / 4.0).unwrap();
    let r = gauge_residual(&h, &k, 0.2, spec).unwrap();
    assert!(r <= 5e-2, "normalized gauge residual {r:e}");
}

#[test]
fn grid_files_round_trip() {
    let (k, h) = moving_cloud(3, 0.2);
    let spec = GridSpec::new(Vec3::new(0.1, 0.0, -0.1), 0.4, 0.1).unwrap();
    let g = FieldGrid::evaluate(&h, &k, 0.2, spec, Exec::Sequential).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("g.vmfg");
    g.save(&p).unwrap();
    assert_eq!(FieldGrid::load(&p).unwrap(), g);
    let csv = dir.path().join("s.csv");
    g.write_csv_slice(&csv, 2, 3).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 8 * 8);
    assert!(text.starts_with("x,y,z,phi,"));
    assert!(g.write_csv_slice(&csv, 3, 0).is_err());
    let mut bytes = g.to_bytes();
    bytes.truncate(bytes.len() - 3);
    assert!(matches!(FieldGrid::from_bytes(&bytes), Err(Error::Format(_))));
}

#[test]
fn sequential_and_parallel_grids_agree() {
    let (k, h) = moving_cloud(4, 0.2);
    let spec = GridSpec::new(Vec3::ZERO, 0.4, 0.1).unwrap();
    let a = FieldGrid::evaluate(&h, &k, 0.2, spec, Exec::Sequential).unwrap();
    let b = FieldGrid::evaluate(&h, &k, 0.2, spec, Exec::Parallel).unwrap();
    assert_eq!(a, b);
}

//! Sequential vs parallel force sweeps, lattice field evaluation and runs.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use vmreg::dynamics::{forces_at_node, sample_cloud, simulate, SimConfig};
use vmreg::fields::{FieldGrid, GridSpec};
use vmreg::kernels::{build_kernel_tables, build_mollifier, ChiFamily};
use vmreg::{Exec, Vec3};

const EPS: f64 = 0.2;

fn sweeps(c: &mut Criterion) {
    let p = build_mollifier(EPS, ChiFamily::Bump).unwrap();
    let k = build_kernel_tables(&p, 0.5, EPS / 8.0, EPS / 8.0).unwrap();

    let mut g = c.benchmark_group("force_sweep");
    for n in [64usize, 256] {
        let cfg = SimConfig::new(EPS, 0.05, 0.5, n);
        let hist = simulate(&cfg, &k, &sample_cloud(n, 1.0, 0.5, 1)).unwrap();
        for exec in [Exec::Sequential, Exec::Parallel] {
            let mut cfg = cfg.clone();
            cfg.exec = exec;
            g.bench_with_input(BenchmarkId::new(format!("{exec:?}"), n), &n, |b, _| {
                b.iter(|| forces_at_node(black_box(&hist), hist.steps(), &k, &cfg).unwrap())
            });
        }
    }
    g.finish();

    let mut g = c.benchmark_group("field_grid");
    g.sample_size(10);
    let hist = simulate(&SimConfig::new(EPS, 0.05, 0.5, 16), &k, &sample_cloud(16, 0.5, 0.5, 2)).unwrap();
    let spec = GridSpec::new(Vec3::ZERO, 0.8, EPS / 4.0).unwrap();
    for exec in [Exec::Sequential, Exec::Parallel] {
        g.bench_function(format!("{exec:?}"), |b| {
            b.iter(|| FieldGrid::evaluate(black_box(&hist), &k, 0.5, spec, exec).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    let init = sample_cloud(64, 1.0, 0.5, 3);
    for exec in [Exec::Sequential, Exec::Parallel] {
        let mut cfg = SimConfig::new(EPS, 0.05, 0.5, 64);
        cfg.exec = exec;
        g.bench_function(format!("{exec:?}"), |b| b.iter(|| simulate(&cfg, &k, black_box(&init)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, sweeps);
criterion_main!(benches);

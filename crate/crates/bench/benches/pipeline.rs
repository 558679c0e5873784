use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use cubic_orbit::shooting::shoot;
use cubic_orbit::stability::{compute_w, StabilityReport};
use cubic_orbit::sweep::{default_integrator, run_point, GridPoint};
use cubic_orbit::variational::compute_b;
use cubic_orbit::{IntegratorConfig, SweepConfig};
use cubic_orbit_bench::orbit;

fn bench(c: &mut Criterion) {
    let sol = orbit();
    let cfg = IntegratorConfig::default();
    let mut g = c.benchmark_group("pipeline");
    g.sample_size(20);
    g.bench_function("shoot", |b| b.iter(|| shoot(black_box(sol.alpha), sol.beta, sol.energy, &cfg)));
    g.bench_function("compute_b", |b| b.iter(|| compute_b(black_box(sol), &cfg)));
    let bm = compute_b(sol, &cfg).unwrap();
    g.bench_function("stability_from_b", |b| {
        b.iter(|| StabilityReport::from_w(compute_w(black_box(&bm)).unwrap()))
    });
    let sweep = SweepConfig {
        max_collisions: 50,
        ..SweepConfig::default()
    };
    let p = GridPoint {
        a: PI / 2.0,
        b: 0.0,
        c: PI,
        r: 0.01,
    };
    g.bench_function("sweep_point_50_collisions", |b| {
        b.iter(|| run_point(black_box(p), sol, &sweep, &default_integrator()))
    });
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use fracblow::kernel::{self, Alpha, KernelEval};
use fracblow::spde::{replicate_rng, Stepper};
use fracblow::volterra;
use fracblow_bench::{initial_state, spde_fixture, time_grid};

fn density(c: &mut Criterion) {
    let mut group = c.benchmark_group("density");
    for a in [0.8, 1.5, 1.9] {
        let alpha = Alpha::new(a).unwrap();
        let cfg = KernelEval::for_alpha(alpha);
        group.bench_with_input(BenchmarkId::from_parameter(a), &alpha, |b, &alpha| {
            b.iter(|| kernel::density(alpha, black_box(0.7), black_box(1.3), &cfg).unwrap())
        });
    }
    group.finish();
}

fn torus(c: &mut Criterion) {
    let alpha = Alpha::new(1.5).unwrap();
    c.bench_function("torus_density", |b| {
        b.iter(|| kernel::torus_density(alpha, black_box(1e-3), black_box(0.0), 10.0))
    });
}

fn spde_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("spde_step");
    for n in [256, 512, 2048] {
        let cfg = spde_fixture(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &cfg, |b, cfg| {
            let mut stepper = Stepper::new(cfg).unwrap();
            let mut rng = replicate_rng(0, 0);
            let mut state = initial_state(cfg);
            b.iter(|| {
                stepper.step(&mut state, &mut rng);
                if state.t > 0.5 {
                    state = initial_state(cfg);
                }
            })
        });
    }
    group.finish();
}

fn volterra_moment(c: &mut Criterion) {
    let alpha = Alpha::new(2.0).unwrap();
    let grid = time_grid(1.0, 1000);
    c.bench_function("volterra_second_moment", |b| {
        b.iter(|| volterra::volterra_second_moment(alpha, 1.0, 1.0, 10.0, black_box(&grid)).unwrap())
    });
}

criterion_group!(benches, density, torus, spde_step, volterra_moment);
criterion_main!(benches);

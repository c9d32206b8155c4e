use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use impulsive_bench::damped_rotation;
use impulsive_core::{
    flow, probe_k_estimate, scalar_probe, solve_ivp, CoefficientOperator, DVector,
    FundamentalSolution, ImpulseSchedule, ImpulsiveSystem, JumpSequence, DEFAULT_H_MAX,
};

fn bench_flow(c: &mut Criterion) {
    let (system, _) = damped_rotation(3, 10.0);
    let x0 = DVector::from_element(3, 1.0);
    c.bench_function("flow/3d/unit-interval", |b| {
        b.iter(|| flow(system.coefficients(), None, 0.0, 1.0, black_box(&x0), DEFAULT_H_MAX).unwrap())
    });
}

fn bench_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_ivp");
    for n in [1usize, 2, 3] {
        let (system, forcing) = damped_rotation(n, 20.0);
        let x0 = DVector::from_element(n, 1.0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| solve_ivp(&system, &forcing, black_box(&x0), DEFAULT_H_MAX).unwrap())
        });
    }
    group.finish();
}

fn bench_evolution(c: &mut Criterion) {
    let (system, _) = damped_rotation(3, 20.0);
    c.bench_function("fundamental/build/3d", |b| {
        b.iter(|| FundamentalSolution::build(black_box(&system), DEFAULT_H_MAX).unwrap())
    });
    let f = FundamentalSolution::build(&system, DEFAULT_H_MAX).unwrap();
    c.bench_function("fundamental/evolution-query/3d", |b| {
        b.iter(|| f.evolution(black_box(17.3), black_box(2.6)).unwrap())
    });
}

fn bench_probe(c: &mut Criterion) {
    let schedule = ImpulseSchedule::uniform(1.0, 40.0).unwrap();
    let system = ImpulsiveSystem::new(
        CoefficientOperator::scalar(0.0),
        JumpSequence::scalars(&vec![0.5; schedule.len()]),
        schedule,
    )
    .unwrap();
    c.bench_function("scalar_probe/halving/40", |b| {
        b.iter(|| scalar_probe(black_box(&system), DEFAULT_H_MAX).unwrap())
    });
    let (rot, _) = damped_rotation(2, 10.0);
    c.bench_function("probe_k_estimate/2d/4-trials", |b| {
        b.iter(|| probe_k_estimate(black_box(&rot), 4, 1).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = bench_flow, bench_solve, bench_evolution, bench_probe
}
criterion_main!(benches);

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use ulpscope::expr::run;
use ulpscope::linalg::solve;
use ulpscope::sweep::{sweep, SweepConfig};
use ulpscope::{Oracle, PerturbationContext, PerturbationPolicy, PerturbationStrategy, Plain};
use ulpscope_bench::{corpus_workloads, linear_system};

fn backends(c: &mut Criterion) {
    let strategy = PerturbationStrategy::default();
    let policy = PerturbationPolicy::default();
    let mut group = c.benchmark_group("corpus");
    for w in corpus_workloads() {
        group.bench_with_input(BenchmarkId::new("plain", w.name), &w, |b, w| {
            b.iter(|| run(&w.program, black_box(&w.values), &mut Plain, &mut Vec::new()))
        });
        group.bench_with_input(BenchmarkId::new("perturbed", w.name), &w, |b, w| {
            b.iter(|| {
                let mut ctx = PerturbationContext::new(strategy.clone(), policy).without_trace();
                run(&w.program, black_box(&w.values), &mut ctx, &mut Vec::new())
            })
        });
        group.bench_with_input(BenchmarkId::new("traced", w.name), &w, |b, w| {
            b.iter(|| {
                let mut ctx = PerturbationContext::new(strategy.clone(), policy);
                run(&w.program, black_box(&w.values), &mut ctx, &mut Vec::new())
            })
        });
        group.bench_with_input(BenchmarkId::new("oracle", w.name), &w, |b, w| {
            b.iter(|| run(&w.program, black_box(&w.values), &mut Oracle, &mut Vec::new()))
        });
    }
    group.finish();
}

fn lu(c: &mut Criterion) {
    let (a, rhs) = linear_system(50, 1e8, 1);
    let mut group = c.benchmark_group("lu_solve_50");
    group.bench_function("plain", |b| b.iter(|| solve(black_box(&a), &rhs, &mut Plain)));
    group.bench_function("perturbed", |b| {
        b.iter(|| {
            let mut ctx =
                PerturbationContext::new(PerturbationStrategy::default(), PerturbationPolicy::default()).without_trace();
            solve(black_box(&a), &rhs, &mut ctx)
        })
    });
    group.bench_function("oracle", |b| b.iter(|| solve(black_box(&a), &rhs, &mut Oracle)));
    group.finish();
}

fn sweeps(c: &mut Criterion) {
    let program = ulpscope::corpus::find("legendre_q0").unwrap().program().unwrap();
    let config = SweepConfig::around(1.0);
    c.bench_function("sweep_2001_points", |b| {
        b.iter(|| sweep(&program, "x", &config, &PerturbationStrategy::default(), &PerturbationPolicy::default()))
    });
}

criterion_group!(benches, backends, lu, sweeps);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use icnnm::solver::prox_l21;
use icnnm::{cnnm_solve, conv_adjoint, conv_matrix, icnnm_solve, SolverConfig};
use icnnm_bench::image_instance;
use std::hint::black_box;

fn solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_64x64");
    group.sample_size(10);
    let cfg = SolverConfig::default();
    for kernel in [4, 8] {
        let inst = image_instance(64, kernel, 7);
        group.bench_with_input(BenchmarkId::new("icnnm", kernel), &inst, |b, p| {
            b.iter(|| icnnm_solve(&p.observed, &p.mask, &p.basis, &cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("cnnm", kernel), &inst, |b, p| {
            b.iter(|| cnnm_solve(&p.observed, &p.mask, &p.kernel, &cfg).unwrap())
        });
    }
    group.finish();
}

fn operators(c: &mut Criterion) {
    let mut group = c.benchmark_group("operators_64x64");
    for kernel in [4, 8, 13] {
        let inst = image_instance(64, kernel, 3);
        let a = conv_matrix(&inst.target, &inst.kernel).unwrap().matrix;
        group.bench_with_input(BenchmarkId::new("conv_matrix", kernel), &inst, |b, p| {
            b.iter(|| conv_matrix(black_box(&p.target), &p.kernel).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("conv_adjoint", kernel), &a, |b, a| {
            b.iter(|| conv_adjoint(black_box(a), &inst.kernel, inst.target.dims()).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("prox_l21", kernel), &a, |b, a| {
            b.iter(|| prox_l21(black_box(a), 0.5))
        });
    }
    group.finish();
}

criterion_group!(benches, solvers, operators);
criterion_main!(benches);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mwtree::random::{random_tree, trial_rng};
use mwtree::{bound_report, laplacian, locate, pinv, Tree, WeightClass, DEFAULT_TIE_TOL};

fn sample(class: WeightClass, n: usize, s: usize) -> Tree {
    random_tree(class, n, s, &mut trial_rng(7, n as u64)).unwrap()
}

fn spectral(c: &mut Criterion) {
    let sizes = [8, 16, 32];
    let mut group = c.benchmark_group("pd_s3");
    for &n in &sizes {
        let tree = sample(WeightClass::PositiveDefinite, n, 3);
        group.bench_with_input(BenchmarkId::new("laplacian", n), &tree, |b, t| {
            b.iter(|| laplacian(black_box(t)))
        });
        group.bench_with_input(BenchmarkId::new("locate", n), &tree, |b, t| {
            b.iter(|| locate(black_box(t), DEFAULT_TIE_TOL).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("bound_report", n), &tree, |b, t| {
            b.iter(|| bound_report(black_box(t), DEFAULT_TIE_TOL).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("pinv", n), &tree, |b, t| {
            b.iter(|| pinv(black_box(t)).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("lower_s3");
    for &n in &sizes {
        let tree = sample(WeightClass::LowerTriangular, n, 3);
        group.bench_with_input(BenchmarkId::new("locate", n), &tree, |b, t| {
            b.iter(|| locate(black_box(t), DEFAULT_TIE_TOL).unwrap())
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = spectral
}
criterion_main!(benches);

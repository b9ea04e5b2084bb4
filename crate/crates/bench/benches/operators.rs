use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fuse_bench::{advection_1d, advection_2d, shifted, space_2d};
use fuse_core::sparse::SparseLu;
use fuse_core::vnstab::{scan_stability, SymbolOperator};
use fuse_core::NodeKind;

fn assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assemble");
    for level in [0, 1, 2] {
        let space = space_2d(3, level).unwrap();
        g.bench_with_input(BenchmarkId::new("laplacian_2d_p3", level), &space, |b, s| {
            b.iter(|| s.laplacian(black_box([0.6, 0.8])))
        });
    }
    g.finish();
}

fn apply(c: &mut Criterion) {
    let mut g = c.benchmark_group("apply");
    for n in [64, 256, 1024] {
        let (op, u) = advection_1d(4, n).unwrap();
        let mut y = vec![0.0; u.len()];
        g.bench_with_input(BenchmarkId::new("advection_1d_p4", n), &u, |b, u| {
            b.iter(|| op.mul_vec_into(black_box(u), &mut y))
        });
    }
    g.finish();
}

fn factor(c: &mut Criterion) {
    let mut g = c.benchmark_group("sparse_lu");
    g.sample_size(20);
    for level in [1, 2] {
        let a = shifted(&advection_2d(3, level).unwrap(), 50.0);
        let rhs = vec![1.0; a.n_rows()];
        g.bench_with_input(BenchmarkId::new("factor", level), &a, |b, a| b.iter(|| SparseLu::new(a).unwrap()));
        let lu = SparseLu::new(&a).unwrap();
        g.bench_with_input(BenchmarkId::new("solve", level), &rhs, |b, r| b.iter(|| lu.solve(r).unwrap()));
    }
    g.finish();
}

fn stability(c: &mut Criterion) {
    let mut g = c.benchmark_group("scan_stability");
    g.sample_size(10);
    for p in [4, 12, 20] {
        g.bench_with_input(BenchmarkId::new("first_1024", p), &p, |b, &p| {
            b.iter(|| scan_stability(NodeKind::GaussLegendrePlusEndpoints, p, SymbolOperator::First, 1024).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, assembly, apply, factor, stability);
criterion_main!(benches);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use srmt_core::averaged::{moment_operator, moment_q2_closed, solve_averaged};
use srmt_core::linalg::{eig_hermitian_select, eigenvalues};
use srmt_core::mc::{assemble, sample_gue, EnergyWindow};
use srmt_core::model::build_inverse_index_profile;
use srmt_core::saddle::solve_saddle;
use srmt_core::special::faddeeva;
use srmt_core::{Complex64, DiagonalProfile};

fn special(c: &mut Criterion) {
    let mut group = c.benchmark_group("faddeeva");
    for (name, z) in [
        ("small", Complex64::new(0.3, 0.4)),
        ("region", Complex64::new(3.0, 1.5)),
        ("far", Complex64::new(40.0, 2.0)),
    ] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &z, |b, z| {
            b.iter(|| faddeeva(black_box(*z)))
        });
    }
    group.finish();
}

fn saddle(c: &mut Criterion) {
    let mut group = c.benchmark_group("saddle_solve");
    for n in [256, 1024, 4096] {
        let profile = build_inverse_index_profile(n).unwrap();
        group.bench_with_input(BenchmarkId::new("inverse_index", n), &profile, |b, p| {
            b.iter(|| solve_saddle(p, black_box(0.0), None).unwrap())
        });
    }
    group.finish();
}

fn averaged(c: &mut Criterion) {
    let mut group = c.benchmark_group("averaged");
    group.bench_function("solve_sigma10", |b| {
        b.iter(|| solve_averaged(black_box(1.0), 10.0, None).unwrap())
    });
    let sol = solve_averaged(1.0, 10.0, None).unwrap();
    group.bench_function("moment_q2_closed", |b| {
        b.iter(|| moment_q2_closed(black_box(&sol), 1000).unwrap())
    });
    group.bench_function("moment_operator_q3", |b| {
        b.iter(|| moment_operator(3, black_box(&sol), 1000).unwrap())
    });
    group.finish();
}

fn eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigensolve");
    group.sample_size(10);
    for n in [128, 256, 512] {
        let h = assemble(&sample_gue(n, 3).unwrap(), &DiagonalProfile::uniform(n).unwrap()).unwrap();
        let window = EnergyWindow::default_for(0.0, n);
        group.bench_with_input(BenchmarkId::new("values", n), &h, |b, h| {
            b.iter(|| eigenvalues(h).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("window_vectors", n), &h, |b, h| {
            b.iter(|| eig_hermitian_select(h, |v| Ok(window.select(v))).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, special, saddle, averaged, eigen);
criterion_main!(benches);

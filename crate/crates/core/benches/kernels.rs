use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qpaccel::{CscMatrix, DualVector, SpdFactor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_sparse(n: usize, per_col: usize, seed: u64) -> CscMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trips = Vec::with_capacity(n * per_col);
    for j in 0..n {
        for _ in 0..per_col {
            trips.push((rng.random_range(0..n), j, rng.random_range(-1.0..1.0)));
        }
    }
    CscMatrix::from_triplets(n, n, &trips).unwrap()
}

/// Banded SPD matrix (upper triangle); banded so Cholesky without reordering
/// stays sparse.
fn banded_spd(n: usize, bw: usize, seed: u64) -> CscMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trips = Vec::new();
    for j in 0..n {
        for i in j.saturating_sub(bw)..j {
            trips.push((i, j, rng.random_range(-1.0..1.0)));
        }
        trips.push((j, j, 2.0 * bw as f64 + 1.0));
    }
    CscMatrix::from_triplets(n, n, &trips).unwrap()
}

fn spmv(c: &mut Criterion) {
    let mut group = c.benchmark_group("spmv");
    for &(n, per_col) in &[(20_000usize, 8usize), (50_000, 4)] {
        let a = random_sparse(n, per_col, n as u64);
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let s: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let dv = DualVector::from_channels(&x, &s).unwrap();
        let mut y = vec![0.0; n];
        let mut out = DualVector::zeros(n);
        group.bench_with_input(BenchmarkId::new("single", a.nnz()), &a, |b, a| {
            b.iter(|| a.spmv_into(black_box(&x), &mut y).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("paired", a.nnz()), &a, |b, a| {
            b.iter(|| a.spmv_paired_into(black_box(&dv), &mut out).unwrap())
        });
    }
    group.finish();
}

fn factor_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("factor_solve");
    for &n in &[5_000usize, 20_000] {
        let w = banded_spd(n, 10, n as u64);
        let f = SpdFactor::factorize(&w).unwrap();
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let s: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let dv = DualVector::from_channels(&x, &s).unwrap();
        group.bench_with_input(BenchmarkId::new("single", n), &f, |b, f| {
            let mut buf = x.clone();
            b.iter(|| {
                buf.copy_from_slice(&x);
                f.solve_in_place(black_box(&mut buf)).unwrap()
            })
        });
        group.bench_with_input(BenchmarkId::new("paired", n), &f, |b, f| {
            let mut buf = dv.clone();
            b.iter(|| {
                buf.as_mut_slice().copy_from_slice(dv.as_slice());
                f.solve_paired_in_place(black_box(&mut buf)).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, spmv, factor_solve);
criterion_main!(benches);

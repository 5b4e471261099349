//! Timing of single- against paired-channel SpMV and triangular solves.

use std::hint::black_box;
use std::time::Instant;

use anyhow::Result;
use qpaccel::{CscMatrix, DualVector, SpdFactor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct MicroRow {
    pub matrix: String,
    pub op: &'static str,
    pub nnz: usize,
    pub single_ns: f64,
    pub paired_ns: f64,
}

impl MicroRow {
    pub fn ratio(&self) -> f64 {
        self.paired_ns / self.single_ns
    }
}

/// Square random matrix with `per_col` entries per column.
pub fn random_matrix(n: usize, per_col: usize, seed: u64) -> CscMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trips: Vec<_> = (0..n)
        .flat_map(|j| (0..per_col).map(move |_| j))
        .map(|j| (rng.random_range(0..n), j, rng.random_range(-1.0..1.0)))
        .collect();
    CscMatrix::from_triplets(n, n, &trips).expect("in range")
}

/// Upper triangle of a diagonally dominant banded matrix; its Cholesky factor
/// has the same band, so no reordering is needed.
pub fn banded_spd(n: usize, bandwidth: usize, seed: u64) -> CscMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trips = Vec::new();
    for j in 0..n {
        for i in j.saturating_sub(bandwidth)..j {
            trips.push((i, j, rng.random_range(-1.0..1.0)));
        }
        trips.push((j, j, 2.0 * bandwidth as f64 + 1.0));
    }
    CscMatrix::from_triplets(n, n, &trips).expect("in range")
}

fn min_time<F: FnMut()>(reps: usize, mut f: F) -> f64 {
    let mut best = f64::INFINITY;
    for _ in 0..reps.max(1) {
        let t0 = Instant::now();
        f();
        best = best.min(t0.elapsed().as_nanos() as f64);
    }
    best
}

fn channels(n: usize) -> (Vec<f64>, DualVector) {
    let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
    let s: Vec<f64> = (0..n).map(|i| (i as f64 * 0.11).cos()).collect();
    let dv = DualVector::from_channels(&x, &s).expect("equal lengths");
    (x, dv)
}

pub fn time_spmv(name: &str, a: &CscMatrix, reps: usize) -> MicroRow {
    let (x, dv) = channels(a.ncols);
    let mut y = vec![0.0; a.nrows];
    let mut out = DualVector::zeros(a.nrows);
    // warm caches once
    a.spmv_into(&x, &mut y).expect("square");
    let single_ns = min_time(reps, || a.spmv_into(black_box(&x), &mut y).expect("square"));
    let paired_ns = min_time(reps, || {
        a.spmv_paired_into(black_box(&dv), &mut out)
            .expect("square")
    });
    MicroRow {
        matrix: name.to_string(),
        op: "spmv",
        nnz: a.nnz(),
        single_ns,
        paired_ns,
    }
}

pub fn time_solve(name: &str, f: &SpdFactor, reps: usize) -> MicroRow {
    let (x, dv) = channels(f.dim());
    let mut buf = x.clone();
    let mut pbuf = dv.clone();
    let single_ns = min_time(reps, || {
        buf.copy_from_slice(&x);
        f.solve_in_place(black_box(&mut buf)).expect("dimension")
    });
    let paired_ns = min_time(reps, || {
        pbuf.as_mut_slice().copy_from_slice(dv.as_slice());
        f.solve_paired_in_place(black_box(&mut pbuf))
            .expect("dimension")
    });
    MicroRow {
        matrix: name.to_string(),
        op: "factor_solve",
        nnz: f.nnz(),
        single_ns,
        paired_ns,
    }
}

/// Five SpMV matrices and five factor-solves, each with at least `nnz_min`
/// stored entries.
pub fn run(nnz_min: usize, reps: usize, seed: u64) -> Vec<MicroRow> {
    let mut rows = Vec::new();
    for (i, per_col) in [2usize, 4, 8, 16, 32].into_iter().enumerate() {
        let n = nnz_min.div_ceil(per_col) * 11 / 10;
        let a = random_matrix(n, per_col, seed + i as u64);
        rows.push(time_spmv(&format!("rand_n{n}_k{per_col}"), &a, reps));
    }
    for (i, bw) in [2usize, 4, 8, 16, 32].into_iter().enumerate() {
        // a lower band stores n(bw+1) − bw(bw+1)/2 entries
        let n = (nnz_min + bw * (bw + 1) / 2).div_ceil(bw + 1) * 11 / 10;
        let w = banded_spd(n, bw, seed + 100 + i as u64);
        let f = SpdFactor::factorize(&w).expect("diagonally dominant");
        rows.push(time_solve(&format!("band_n{n}_b{bw}"), &f, reps));
    }
    rows
}

pub fn write_csv<W: std::io::Write>(rows: &[MicroRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["matrix", "op", "nnz", "single_ns", "paired_ns", "ratio"])?;
    for r in rows {
        w.write_record([
            r.matrix.clone(),
            r.op.to_string(),
            r.nnz.to_string(),
            format!("{:.0}", r.single_ns),
            format!("{:.0}", r.paired_ns),
            format!("{:.4}", r.ratio()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

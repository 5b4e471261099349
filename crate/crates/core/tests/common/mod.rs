#![allow(dead_code)]

use qpaccel::{CscMatrix, QpProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-scale..scale)).collect()
}

/// Small dense instance with P = BᵀB + reg·I and a strictly feasible point.
pub fn small_qp(seed: u64, n: usize, m1: usize, m2: usize, reg: f64) -> QpProblem {
    let mut r = rng(seed);
    let b_mat: Vec<Vec<f64>> = (0..n).map(|_| uniform_vec(&mut r, n, 1.0)).collect();
    let mut p = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            p[i][j] = (0..n).map(|k| b_mat[k][i] * b_mat[k][j]).sum::<f64>();
        }
        p[i][i] += reg;
    }
    let m = m1 + m2;
    let a: Vec<Vec<f64>> = (0..m).map(|_| uniform_vec(&mut r, n, 1.0)).collect();
    let x0 = uniform_vec(&mut r, n, 1.0);
    let c = uniform_vec(&mut r, n, 2.0);
    let b: Vec<f64> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let ax: f64 = row.iter().zip(&x0).map(|(u, v)| u * v).sum();
            if i < m1 {
                ax + r.random_range(0.1..1.0)
            } else {
                ax
            }
        })
        .collect();
    let a = if m == 0 {
        CscMatrix::zeros(0, n)
    } else {
        CscMatrix::from_dense(&a)
    };
    QpProblem::new(CscMatrix::from_dense(&p), c, a, b, m1, m2).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

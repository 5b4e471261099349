//! Small dense kernels: vector helpers, LU with partial pivoting, and a
//! Householder least-squares solver. Matrices are row-major `Vec<Vec<f64>>`
//! unless stated otherwise.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// y += alpha * x
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting. Returns
/// `None` when a pivot falls below `pivot_tol` times the largest entry of `a`.
pub fn lu_solve(a: &[Vec<f64>], b: &[f64], pivot_tol: f64) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut rhs = b.to_vec();
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for k in 0..n {
        let (piv, pmax) = (k..n)
            .map(|i| (i, m[i][k].abs()))
            .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
        if pmax <= pivot_tol * scale {
            return None;
        }
        m.swap(k, piv);
        rhs.swap(k, piv);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
            rhs[i] -= f * rhs[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| m[k][j] * x[j]).sum();
        x[k] = (rhs[k] - s) / m[k][k];
    }
    Some(x)
}

/// Outcome of a least-squares solve that found a tiny diagonal in R.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankDeficient {
    pub column: usize,
    pub diag: f64,
}

/// Solves `min ‖b − A x‖₂` for a tall matrix given as a list of columns, via
/// Householder QR. Fails when |R_ii| < `diag_tol`.
pub fn least_squares_columns(
    cols: &[Vec<f64>],
    b: &[f64],
    diag_tol: f64,
) -> Result<Vec<f64>, RankDeficient> {
    let p = cols.len();
    let mut a: Vec<Vec<f64>> = cols.to_vec();
    let mut rhs = b.to_vec();
    let m = rhs.len();
    for k in 0..p {
        let alpha = {
            let s: f64 = a[k][k..].iter().map(|v| v * v).sum();
            let nrm = s.sqrt();
            if a[k][k] > 0.0 {
                -nrm
            } else {
                nrm
            }
        };
        if alpha.abs() < diag_tol {
            return Err(RankDeficient {
                column: k,
                diag: alpha,
            });
        }
        // v = x - alpha e1
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 > 0.0 {
            for col in a.iter_mut().skip(k) {
                let s: f64 = v.iter().zip(&col[k..m]).map(|(x, y)| x * y).sum();
                let f = 2.0 * s / vnorm2;
                for (ci, vi) in col[k..m].iter_mut().zip(&v) {
                    *ci -= f * vi;
                }
            }
            let s: f64 = v.iter().zip(&rhs[k..m]).map(|(x, y)| x * y).sum();
            let f = 2.0 * s / vnorm2;
            for (ri, vi) in rhs[k..m].iter_mut().zip(&v) {
                *ri -= f * vi;
            }
        }
    }
    let mut x = vec![0.0; p];
    for k in (0..p).rev() {
        let s: f64 = (k + 1..p).map(|j| a[j][k] * x[j]).sum();
        x[k] = (rhs[k] - s) / a[k][k];
    }
    Ok(x)
}

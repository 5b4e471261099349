//! Compressed-sparse-column storage, single- and paired-channel products, and
//! a sparse Cholesky factorization with paired-channel triangular solves.
//!
//! "Paired" kernels carry two vectors of equal length through one pass over the
//! matrix data. The two channels are stored interleaved (`[p0, s0, p1, s1, ...]`)
//! so that every matrix entry loaded from memory is used twice. Per channel the
//! floating-point operations happen in exactly the same order as in the
//! single-channel kernel, so results agree bitwise.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid CSC structure: {0}")]
    InvalidStructure(String),
    #[error("matrix is not positive definite (pivot {pivot:e} at column {column})")]
    NotPositiveDefinite { column: usize, pivot: f64 },
}

fn check_len(expected: usize, got: usize) -> Result<(), SparseError> {
    if expected != got {
        return Err(SparseError::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Real sparse matrix in compressed-sparse-column format with 0-based indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub colptr: Vec<usize>,
    pub rowind: Vec<usize>,
    pub nzval: Vec<f64>,
}

impl CscMatrix {
    /// Builds a matrix from raw CSC arrays, validating the structure.
    pub fn new(
        nrows: usize,
        ncols: usize,
        colptr: Vec<usize>,
        rowind: Vec<usize>,
        nzval: Vec<f64>,
    ) -> Result<Self, SparseError> {
        let m = CscMatrix {
            nrows,
            ncols,
            colptr,
            rowind,
            nzval,
        };
        m.check()?;
        Ok(m)
    }

    /// Scans the structural invariants: monotone `colptr` starting at zero and
    /// ending at nnz, strictly increasing in-range row indices per column.
    pub fn check(&self) -> Result<(), SparseError> {
        let bad = |s: String| Err(SparseError::InvalidStructure(s));
        if self.colptr.len() != self.ncols + 1 {
            return bad(format!(
                "colptr has length {}, expected {}",
                self.colptr.len(),
                self.ncols + 1
            ));
        }
        if self.colptr[0] != 0 {
            return bad("colptr[0] != 0".into());
        }
        if self.rowind.len() != self.nzval.len() {
            return bad("rowind and nzval lengths differ".into());
        }
        if self.colptr[self.ncols] != self.rowind.len() {
            return bad("colptr[ncols] != nnz".into());
        }
        for j in 0..self.ncols {
            let (lo, hi) = (self.colptr[j], self.colptr[j + 1]);
            if hi < lo {
                return bad(format!("colptr decreases at column {j}"));
            }
            let rows = &self.rowind[lo..hi];
            for (k, &r) in rows.iter().enumerate() {
                if r >= self.nrows {
                    return bad(format!("row index {r} out of range in column {j}"));
                }
                if k > 0 && rows[k - 1] >= r {
                    return bad(format!("row indices not strictly increasing in column {j}"));
                }
            }
        }
        Ok(())
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CscMatrix {
            nrows,
            ncols,
            colptr: vec![0; ncols + 1],
            rowind: Vec::new(),
            nzval: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        CscMatrix {
            nrows: n,
            ncols: n,
            colptr: (0..=n).collect(),
            rowind: (0..n).collect(),
            nzval: d.to_vec(),
        }
    }

    /// Assembles from `(row, col, value)` triplets. Duplicates are summed;
    /// explicit zeros are kept.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, SparseError> {
        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= nrows || c >= ncols {
                return Err(SparseError::InvalidStructure(format!(
                    "triplet ({r}, {c}) outside {nrows}x{ncols}"
                )));
            }
            sorted.push((r, c, v));
        }
        sorted.sort_by_key(|a| (a.1, a.0));
        let mut colptr = vec![0usize; ncols + 1];
        let mut rowind = Vec::with_capacity(sorted.len());
        let mut nzval: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *nzval.last_mut().unwrap() += v;
                continue;
            }
            rowind.push(r);
            nzval.push(v);
            colptr[c + 1] += 1;
            last = Some((r, c));
        }
        for j in 0..ncols {
            colptr[j + 1] += colptr[j];
        }
        Ok(CscMatrix {
            nrows,
            ncols,
            colptr,
            rowind,
            nzval,
        })
    }

    /// Row-major dense input; exact zeros are dropped.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut trip = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), ncols, "ragged dense input");
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, &trip).expect("in-range by construction")
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for j in 0..self.ncols {
            for p in self.colptr[j]..self.colptr[j + 1] {
                out[self.rowind[p]][j] += self.nzval[p];
            }
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.nzval.len()
    }

    pub fn transpose(&self) -> CscMatrix {
        let mut count = vec![0usize; self.nrows + 1];
        for &r in &self.rowind {
            count[r + 1] += 1;
        }
        for i in 0..self.nrows {
            count[i + 1] += count[i];
        }
        let colptr = count.clone();
        let mut next = count;
        let mut rowind = vec![0; self.nnz()];
        let mut nzval = vec![0.0; self.nnz()];
        for j in 0..self.ncols {
            for p in self.colptr[j]..self.colptr[j + 1] {
                let r = self.rowind[p];
                let q = next[r];
                rowind[q] = j;
                nzval[q] = self.nzval[p];
                next[r] += 1;
            }
        }
        CscMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            colptr,
            rowind,
            nzval,
        }
    }

    /// Keeps entries with `row <= col`.
    pub fn upper_triangle(&self) -> CscMatrix {
        let mut colptr = vec![0usize; self.ncols + 1];
        let mut rowind = Vec::new();
        let mut nzval = Vec::new();
        for j in 0..self.ncols {
            for p in self.colptr[j]..self.colptr[j + 1] {
                if self.rowind[p] <= j {
                    rowind.push(self.rowind[p]);
                    nzval.push(self.nzval[p]);
                }
            }
            colptr[j + 1] = rowind.len();
        }
        CscMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            colptr,
            rowind,
            nzval,
        }
    }

    /// y = A x.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>, SparseError> {
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    /// y = A x, overwriting `y`.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<(), SparseError> {
        check_len(self.ncols, x.len())?;
        check_len(self.nrows, y.len())?;
        y.fill(0.0);
        for (j, &xj) in x.iter().enumerate() {
            for p in self.colptr[j]..self.colptr[j + 1] {
                y[self.rowind[p]] += self.nzval[p] * xj;
            }
        }
        Ok(())
    }

    /// y = Aᵀ x.
    pub fn spmv_transpose(&self, x: &[f64]) -> Result<Vec<f64>, SparseError> {
        let mut y = vec![0.0; self.ncols];
        self.spmv_transpose_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_transpose_into(&self, x: &[f64], y: &mut [f64]) -> Result<(), SparseError> {
        check_len(self.nrows, x.len())?;
        check_len(self.ncols, y.len())?;
        for (j, yj) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for p in self.colptr[j]..self.colptr[j + 1] {
                acc += self.nzval[p] * x[self.rowind[p]];
            }
            *yj = acc;
        }
        Ok(())
    }

    /// y = S x where S is the symmetric matrix whose upper triangle is stored
    /// in `self`. Entries below the diagonal are ignored.
    pub fn spmv_sym_upper(&self, x: &[f64]) -> Result<Vec<f64>, SparseError> {
        let mut y = vec![0.0; self.nrows];
        self.spmv_sym_upper_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_sym_upper_into(&self, x: &[f64], y: &mut [f64]) -> Result<(), SparseError> {
        check_len(self.ncols, x.len())?;
        check_len(self.nrows, y.len())?;
        y.fill(0.0);
        for j in 0..self.ncols {
            let xj = x[j];
            let mut acc = 0.0;
            for p in self.colptr[j]..self.colptr[j + 1] {
                let i = self.rowind[p];
                if i > j {
                    continue;
                }
                let v = self.nzval[p];
                if i == j {
                    acc += v * xj;
                } else {
                    y[i] += v * xj;
                    acc += v * x[i];
                }
            }
            y[j] += acc;
        }
        Ok(())
    }

    /// Paired version of [`CscMatrix::spmv`].
    pub fn spmv_paired(&self, v: &DualVector) -> Result<DualVector, SparseError> {
        let mut out = DualVector::zeros(self.nrows);
        self.spmv_paired_into(v, &mut out)?;
        Ok(out)
    }

    pub fn spmv_paired_into(
        &self,
        v: &DualVector,
        out: &mut DualVector,
    ) -> Result<(), SparseError> {
        check_len(self.ncols, v.len())?;
        check_len(self.nrows, out.len())?;
        let x = &v.data;
        let y = &mut out.data;
        y.fill(0.0);
        for j in 0..self.ncols {
            let (xp, xs) = (x[2 * j], x[2 * j + 1]);
            for p in self.colptr[j]..self.colptr[j + 1] {
                let r = 2 * self.rowind[p];
                let a = self.nzval[p];
                y[r] += a * xp;
                y[r + 1] += a * xs;
            }
        }
        Ok(())
    }

    /// Paired version of [`CscMatrix::spmv_transpose`].
    pub fn spmv_transpose_paired(&self, v: &DualVector) -> Result<DualVector, SparseError> {
        let mut out = DualVector::zeros(self.ncols);
        self.spmv_transpose_paired_into(v, &mut out)?;
        Ok(out)
    }

    pub fn spmv_transpose_paired_into(
        &self,
        v: &DualVector,
        out: &mut DualVector,
    ) -> Result<(), SparseError> {
        check_len(self.nrows, v.len())?;
        check_len(self.ncols, out.len())?;
        let x = &v.data;
        for j in 0..self.ncols {
            let (mut ap, mut as_) = (0.0, 0.0);
            for p in self.colptr[j]..self.colptr[j + 1] {
                let r = 2 * self.rowind[p];
                let a = self.nzval[p];
                ap += a * x[r];
                as_ += a * x[r + 1];
            }
            out.data[2 * j] = ap;
            out.data[2 * j + 1] = as_;
        }
        Ok(())
    }

    /// Paired version of [`CscMatrix::spmv_sym_upper`].
    pub fn spmv_sym_upper_paired_into(
        &self,
        v: &DualVector,
        out: &mut DualVector,
    ) -> Result<(), SparseError> {
        check_len(self.ncols, v.len())?;
        check_len(self.nrows, out.len())?;
        let x = &v.data;
        let y = &mut out.data;
        y.fill(0.0);
        for j in 0..self.ncols {
            let (xp, xs) = (x[2 * j], x[2 * j + 1]);
            let (mut ap, mut as_) = (0.0, 0.0);
            for p in self.colptr[j]..self.colptr[j + 1] {
                let i = self.rowind[p];
                if i > j {
                    continue;
                }
                let a = self.nzval[p];
                if i == j {
                    ap += a * xp;
                    as_ += a * xs;
                } else {
                    y[2 * i] += a * xp;
                    y[2 * i + 1] += a * xs;
                    ap += a * x[2 * i];
                    as_ += a * x[2 * i + 1];
                }
            }
            y[2 * j] += ap;
            y[2 * j + 1] += as_;
        }
        Ok(())
    }

    /// Upper triangle of P + ρAᵀA + δI, where `p_upper` holds the upper
    /// triangle of the symmetric P.
    pub fn assemble_regularized_normal(
        p_upper: &CscMatrix,
        a: &CscMatrix,
        rho: f64,
        delta: f64,
    ) -> Result<CscMatrix, SparseError> {
        let n = p_upper.ncols;
        check_len(n, p_upper.nrows)?;
        check_len(n, a.ncols)?;
        let at = a.transpose();
        let mut acc = vec![0.0; n];
        let mut touched = vec![usize::MAX; n];
        let mut pattern: Vec<usize> = Vec::new();
        let mut colptr = vec![0usize; n + 1];
        let mut rowind = Vec::new();
        let mut nzval = Vec::new();
        for j in 0..n {
            pattern.clear();
            let mut touch = |i: usize, v: f64, acc: &mut [f64], pattern: &mut Vec<usize>| {
                if touched[i] != j {
                    touched[i] = j;
                    acc[i] = 0.0;
                    pattern.push(i);
                }
                acc[i] += v;
            };
            for p in p_upper.colptr[j]..p_upper.colptr[j + 1] {
                let i = p_upper.rowind[p];
                if i <= j {
                    touch(i, p_upper.nzval[p], &mut acc, &mut pattern);
                }
            }
            // column j of AᵀA = Σ_k A[k, j] · (row k of A)ᵀ
            for p in a.colptr[j]..a.colptr[j + 1] {
                let k = a.rowind[p];
                let akj = a.nzval[p];
                for q in at.colptr[k]..at.colptr[k + 1] {
                    let i = at.rowind[q];
                    if i <= j {
                        touch(i, rho * akj * at.nzval[q], &mut acc, &mut pattern);
                    }
                }
            }
            touch(j, delta, &mut acc, &mut pattern);
            pattern.sort_unstable();
            for &i in &pattern {
                rowind.push(i);
                nzval.push(acc[i]);
            }
            colptr[j + 1] = rowind.len();
        }
        Ok(CscMatrix {
            nrows: n,
            ncols: n,
            colptr,
            rowind,
            nzval,
        })
    }
}

/// Two equal-length real vectors stored interleaved: `primary` carries the
/// optimization iterate, `shadow` the Krylov working vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector {
    data: Vec<f64>,
}

impl DualVector {
    pub fn zeros(len: usize) -> Self {
        DualVector {
            data: vec![0.0; 2 * len],
        }
    }

    pub fn from_channels(primary: &[f64], shadow: &[f64]) -> Result<Self, SparseError> {
        check_len(primary.len(), shadow.len())?;
        let mut data = Vec::with_capacity(2 * primary.len());
        for (&p, &s) in primary.iter().zip(shadow) {
            data.push(p);
            data.push(s);
        }
        Ok(DualVector { data })
    }

    pub fn len(&self) -> usize {
        self.data.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn primary(&self) -> Vec<f64> {
        self.data.iter().step_by(2).copied().collect()
    }

    pub fn shadow(&self) -> Vec<f64> {
        self.data.iter().skip(1).step_by(2).copied().collect()
    }

    pub fn get(&self, i: usize) -> (f64, f64) {
        (self.data[2 * i], self.data[2 * i + 1])
    }

    pub fn set(&mut self, i: usize, primary: f64, shadow: f64) {
        self.data[2 * i] = primary;
        self.data[2 * i + 1] = shadow;
    }

    /// Raw interleaved storage.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Cholesky factor L (lower triangular, CSC, diagonal first in each column)
/// with W = L Lᵀ.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    n: usize,
    colptr: Vec<usize>,
    rowind: Vec<usize>,
    nzval: Vec<f64>,
}

/// Pivots at or below this fraction of the largest diagonal entry of W are
/// treated as nonpositive.
const PIVOT_RTOL: f64 = 1e-14;

/// Elimination tree of the symmetric matrix whose upper triangle is `w`.
fn etree(w: &CscMatrix) -> Vec<Option<usize>> {
    let n = w.ncols;
    let mut parent = vec![None; n];
    let mut ancestor: Vec<Option<usize>> = vec![None; n];
    for k in 0..n {
        for p in w.colptr[k]..w.colptr[k + 1] {
            let mut i = w.rowind[p];
            if i >= k {
                continue;
            }
            // climb from i to the root, compressing paths towards k
            loop {
                let next = ancestor[i];
                ancestor[i] = Some(k);
                match next {
                    None => {
                        parent[i] = Some(k);
                        break;
                    }
                    Some(a) if a == k => break,
                    Some(a) => i = a,
                }
            }
        }
    }
    parent
}

/// Nonzero pattern of row k of L, written into `stack[top..]` in topological
/// order. Returns `top`.
fn ereach(
    w: &CscMatrix,
    k: usize,
    parent: &[Option<usize>],
    mark: &mut [usize],
    stack: &mut [usize],
    path: &mut Vec<usize>,
) -> usize {
    let n = w.ncols;
    let mut top = n;
    mark[k] = k;
    for p in w.colptr[k]..w.colptr[k + 1] {
        let mut i = w.rowind[p];
        if i > k {
            continue;
        }
        path.clear();
        while mark[i] != k {
            path.push(i);
            mark[i] = k;
            match parent[i] {
                Some(pi) => i = pi,
                None => break,
            }
        }
        while let Some(v) = path.pop() {
            top -= 1;
            stack[top] = v;
        }
    }
    top
}

impl SpdFactor {
    /// Up-looking sparse Cholesky of the symmetric matrix whose upper triangle
    /// is stored in `w` (entries below the diagonal are ignored). No
    /// fill-reducing permutation is applied.
    pub fn factorize(w: &CscMatrix) -> Result<Self, SparseError> {
        check_len(w.nrows, w.ncols)?;
        let n = w.ncols;
        let parent = etree(w);

        let mut mark = vec![usize::MAX; n];
        let mut stack = vec![0usize; n];
        let mut path = Vec::new();

        // symbolic pass: column counts of L
        let mut counts = vec![1usize; n];
        for k in 0..n {
            let top = ereach(w, k, &parent, &mut mark, &mut stack, &mut path);
            for &i in &stack[top..n] {
                counts[i] += 1;
            }
        }
        let mut colptr = vec![0usize; n + 1];
        for j in 0..n {
            colptr[j + 1] = colptr[j] + counts[j];
        }
        let nnz = colptr[n];
        let mut rowind = vec![0usize; nnz];
        let mut nzval = vec![0.0; nnz];
        let mut next = colptr[..n].to_vec();

        let max_diag = (0..n)
            .flat_map(|j| (w.colptr[j]..w.colptr[j + 1]).filter(move |&p| w.rowind[p] == j))
            .map(|p| w.nzval[p].abs())
            .fold(0.0f64, f64::max);
        let tol = PIVOT_RTOL * max_diag;

        mark.fill(usize::MAX);
        let mut x = vec![0.0; n];
        for k in 0..n {
            let top = ereach(w, k, &parent, &mut mark, &mut stack, &mut path);
            x[k] = 0.0;
            for p in w.colptr[k]..w.colptr[k + 1] {
                let i = w.rowind[p];
                if i <= k {
                    x[i] += w.nzval[p];
                }
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &i in &stack[top..n] {
                let lki = x[i] / nzval[colptr[i]];
                x[i] = 0.0;
                for p in colptr[i] + 1..next[i] {
                    x[rowind[p]] -= nzval[p] * lki;
                }
                d -= lki * lki;
                let q = next[i];
                rowind[q] = k;
                nzval[q] = lki;
                next[i] += 1;
            }
            if !(d > tol) || !d.is_finite() {
                return Err(SparseError::NotPositiveDefinite {
                    column: k,
                    pivot: d,
                });
            }
            let q = next[k];
            rowind[q] = k;
            nzval[q] = d.sqrt();
            next[k] += 1;
        }
        Ok(SpdFactor {
            n,
            colptr,
            rowind,
            nzval,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.nzval.len()
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, SparseError> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    /// Overwrites `x` with W⁻¹x.
    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<(), SparseError> {
        check_len(self.n, x.len())?;
        for j in 0..self.n {
            let p0 = self.colptr[j];
            x[j] /= self.nzval[p0];
            let xj = x[j];
            for p in p0 + 1..self.colptr[j + 1] {
                x[self.rowind[p]] -= self.nzval[p] * xj;
            }
        }
        for j in (0..self.n).rev() {
            let p0 = self.colptr[j];
            let mut acc = x[j];
            for p in p0 + 1..self.colptr[j + 1] {
                acc -= self.nzval[p] * x[self.rowind[p]];
            }
            x[j] = acc / self.nzval[p0];
        }
        Ok(())
    }

    pub fn solve_paired(&self, rhs: &DualVector) -> Result<DualVector, SparseError> {
        let mut out = rhs.clone();
        self.solve_paired_in_place(&mut out)?;
        Ok(out)
    }

    /// Paired version of [`SpdFactor::solve_in_place`].
    pub fn solve_paired_in_place(&self, v: &mut DualVector) -> Result<(), SparseError> {
        check_len(self.n, v.len())?;
        let x = v.as_mut_slice();
        for j in 0..self.n {
            let p0 = self.colptr[j];
            let d = self.nzval[p0];
            x[2 * j] /= d;
            x[2 * j + 1] /= d;
            let (xp, xs) = (x[2 * j], x[2 * j + 1]);
            for p in p0 + 1..self.colptr[j + 1] {
                let r = 2 * self.rowind[p];
                let l = self.nzval[p];
                x[r] -= l * xp;
                x[r + 1] -= l * xs;
            }
        }
        for j in (0..self.n).rev() {
            let p0 = self.colptr[j];
            let (mut ap, mut as_) = (x[2 * j], x[2 * j + 1]);
            for p in p0 + 1..self.colptr[j + 1] {
                let r = 2 * self.rowind[p];
                let l = self.nzval[p];
                ap -= l * x[r];
                as_ -= l * x[r + 1];
            }
            let d = self.nzval[p0];
            x[2 * j] = ap / d;
            x[2 * j + 1] = as_ / d;
        }
        Ok(())
    }
}

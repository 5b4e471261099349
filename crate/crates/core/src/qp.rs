//! Problem data, dual-cone projection, termination residuals, and a brute-force
//! active-set KKT solver used as a reference in tests.
//!
//! Problems have the form
//!
//! ```text
//! minimize    ½ xᵀPx + cᵀx
//! subject to  Ax + s = b,   s ∈ ℝ₊^{m1} × {0}^{m2}
//! ```
//!
//! so the first `m1` rows of A are inequalities `aᵢᵀx ≤ bᵢ` and the last `m2`
//! rows are equalities.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dense::{lu_solve, norm_inf};
use crate::sparse::{CscMatrix, SparseError};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("inconsistent problem dimensions: {0}")]
    Dimensions(String),
    #[error("P is not symmetric within tolerance (|P - Pᵀ| = {0:e})")]
    NotSymmetric(f64),
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    /// Upper triangle of the symmetric PSD Hessian.
    pub p: CscMatrix,
    pub c: Vec<f64>,
    pub a: CscMatrix,
    pub b: Vec<f64>,
    pub m1: usize,
    pub m2: usize,
}

impl QpProblem {
    /// Validates dimensions. `p` may be given in full symmetric form or as its
    /// upper triangle; only the upper triangle is kept.
    pub fn new(
        p: CscMatrix,
        c: Vec<f64>,
        a: CscMatrix,
        b: Vec<f64>,
        m1: usize,
        m2: usize,
    ) -> Result<Self, ProblemError> {
        let n = c.len();
        let dims = |s: String| Err(ProblemError::Dimensions(s));
        if p.nrows != n || p.ncols != n {
            return dims(format!("P is {}x{}, expected {n}x{n}", p.nrows, p.ncols));
        }
        if a.ncols != n {
            return dims(format!("A has {} columns, expected {n}", a.ncols));
        }
        if a.nrows != b.len() || m1 + m2 != b.len() {
            return dims(format!(
                "A has {} rows, b has {}, m1 + m2 = {}",
                a.nrows,
                b.len(),
                m1 + m2
            ));
        }
        p.check()?;
        a.check()?;
        let asym = symmetry_defect(&p);
        if asym > 1e-12 {
            return Err(ProblemError::NotSymmetric(asym));
        }
        Ok(QpProblem {
            p: p.upper_triangle(),
            c,
            a,
            b,
            m1,
            m2,
        })
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    /// Length of the flat iterate `(x, y)`.
    pub fn dim(&self) -> usize {
        self.n() + self.m()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let px = self.p.spmv_sym_upper(x).expect("dimension checked");
        0.5 * crate::dense::dot(x, &px) + crate::dense::dot(&self.c, x)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&QpFile::from(self)).expect("plain data serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ProblemError> {
        let f: QpFile = serde_json::from_str(s)?;
        f.try_into()
    }
}

/// Largest |P_ij − P_ji| over stored entries, where P is the stored matrix
/// (entries present only above the diagonal count as a symmetric half).
fn symmetry_defect(p: &CscMatrix) -> f64 {
    let has_lower = (0..p.ncols).any(|j| (p.colptr[j]..p.colptr[j + 1]).any(|k| p.rowind[k] > j));
    if !has_lower {
        return 0.0;
    }
    let d = p.to_dense();
    let mut worst = 0.0f64;
    for (i, row) in d.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            worst = worst.max((v - d[j][i]).abs());
        }
    }
    worst
}

/// Sparse matrix as it appears in instance files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CscFile {
    pub nrows: usize,
    pub ncols: usize,
    pub colptr: Vec<usize>,
    pub rowind: Vec<usize>,
    pub nzval: Vec<f64>,
}

/// On-disk QP instance: one JSON document, 0-based CSC, P upper triangle only.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct QpFile {
    pub n: usize,
    pub m: usize,
    pub m1: usize,
    pub m2: usize,
    pub c: Vec<f64>,
    pub b: Vec<f64>,
    pub P: CscFile,
    pub A: CscFile,
}

impl From<&CscMatrix> for CscFile {
    fn from(m: &CscMatrix) -> Self {
        CscFile {
            nrows: m.nrows,
            ncols: m.ncols,
            colptr: m.colptr.clone(),
            rowind: m.rowind.clone(),
            nzval: m.nzval.clone(),
        }
    }
}

impl From<&QpProblem> for QpFile {
    fn from(q: &QpProblem) -> Self {
        QpFile {
            n: q.n(),
            m: q.m(),
            m1: q.m1,
            m2: q.m2,
            c: q.c.clone(),
            b: q.b.clone(),
            P: (&q.p).into(),
            A: (&q.a).into(),
        }
    }
}

impl TryFrom<QpFile> for QpProblem {
    type Error = ProblemError;

    fn try_from(f: QpFile) -> Result<Self, ProblemError> {
        let p = CscMatrix::new(f.P.nrows, f.P.ncols, f.P.colptr, f.P.rowind, f.P.nzval)?;
        let a = CscMatrix::new(f.A.nrows, f.A.ncols, f.A.colptr, f.A.rowind, f.A.nzval)?;
        if f.n != f.c.len() || f.m != f.b.len() {
            return Err(ProblemError::Dimensions(format!(
                "header n={}, m={} disagrees with |c|={}, |b|={}",
                f.n,
                f.m,
                f.c.len(),
                f.b.len()
            )));
        }
        if p.ncols > 0
            && (0..p.ncols).any(|j| (p.colptr[j]..p.colptr[j + 1]).any(|k| p.rowind[k] > j))
        {
            return Err(ProblemError::Dimensions(
                "P must be stored as its upper triangle".into(),
            ));
        }
        QpProblem::new(p, f.c, a, f.b, f.m1, f.m2)
    }
}

/// Primal-dual point `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Iterate {
    pub fn zeros(n: usize, m: usize) -> Self {
        Iterate {
            x: vec![0.0; n],
            y: vec![0.0; m],
        }
    }

    /// Flat vector `(x, y)`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut u = Vec::with_capacity(self.x.len() + self.y.len());
        u.extend_from_slice(&self.x);
        u.extend_from_slice(&self.y);
        u
    }

    pub fn from_flat(u: &[f64], n: usize) -> Self {
        Iterate {
            x: u[..n].to_vec(),
            y: u[n..].to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.y).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ResidualTriple {
    pub r_p: f64,
    pub r_d: f64,
    pub pd: f64,
}

impl ResidualTriple {
    pub fn max(&self) -> f64 {
        self.r_p.max(self.r_d).max(self.pd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminationConfig {
    pub eps: f64,
    pub max_iters: usize,
    pub check_every: usize,
}

impl Default for TerminationConfig {
    fn default() -> Self {
        TerminationConfig {
            eps: 1e-6,
            max_iters: 20_000,
            check_every: 25,
        }
    }
}

/// Projection onto ℝ₊^{m1} × ℝ^{m2}.
pub fn project_dual_cone(v: &[f64], m1: usize, m2: usize) -> Vec<f64> {
    assert_eq!(v.len(), m1 + m2, "cone split does not match vector length");
    v.iter()
        .enumerate()
        .map(|(i, &t)| if i < m1 { t.max(0.0) } else { t })
        .collect()
}

/// Scaled primal, dual, and duality-gap residuals. Equality rows contribute
/// |Ax − b| to the primal residual, inequality rows their positive part.
pub fn residuals(prob: &QpProblem, it: &Iterate) -> ResidualTriple {
    let ax = prob.a.spmv(&it.x).expect("x has length n");
    let px = prob.p.spmv_sym_upper(&it.x).expect("x has length n");
    let aty = prob.a.spmv_transpose(&it.y).expect("y has length m");

    let viol = ax
        .iter()
        .zip(&prob.b)
        .enumerate()
        .map(|(i, (a, b))| {
            let r = a - b;
            if i < prob.m1 {
                r.max(0.0)
            } else {
                r.abs()
            }
        })
        .fold(0.0f64, f64::max);
    let r_p = viol / (1.0 + norm_inf(&ax).max(norm_inf(&prob.b)));

    let grad: Vec<f64> = px
        .iter()
        .zip(&aty)
        .zip(&prob.c)
        .map(|((p, a), c)| p + a + c)
        .collect();
    let r_d = norm_inf(&grad) / (1.0 + norm_inf(&px).max(norm_inf(&aty)).max(norm_inf(&prob.c)));

    let xpx = crate::dense::dot(&it.x, &px);
    let cx = crate::dense::dot(&prob.c, &it.x);
    let by = crate::dense::dot(&prob.b, &it.y);
    let pd = (xpx + cx + by).abs() / (1.0 + (0.5 * xpx + cx).abs().max((0.5 * xpx + by).abs()));

    ResidualTriple { r_p, r_d, pd }
}

pub fn is_solved(res: &ResidualTriple, eps: f64) -> bool {
    res.max() <= eps
}

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("no active set yields a KKT point")]
    NoSolutionFound,
    #[error("too many inequality rows to enumerate ({0})")]
    TooLarge(usize),
}

/// Largest `m1` accepted by [`kkt_oracle`].
pub const ORACLE_MAX_INEQUALITIES: usize = 16;

/// Enumerates every subset S of inequality rows (in increasing bitmask order),
/// solves the equality-constrained KKT system with rows S ∪ {equalities}
/// active, and returns the first solution that is primal feasible and has
/// nonnegative inequality multipliers, both within `tol`.
pub fn kkt_oracle(prob: &QpProblem, tol: f64) -> Result<Iterate, OracleError> {
    let (n, m1) = (prob.n(), prob.m1);
    if m1 > ORACLE_MAX_INEQUALITIES {
        return Err(OracleError::TooLarge(m1));
    }
    let pd = {
        // full symmetric P
        let mut d = prob.p.to_dense();
        for i in 0..n {
            for j in 0..i {
                d[i][j] = d[j][i];
            }
        }
        d
    };
    let ad = prob.a.to_dense();

    for mask in 0u32..(1u32 << m1) {
        let rows: Vec<usize> = (0..m1)
            .filter(|i| mask & (1 << i) != 0)
            .chain(m1..prob.m())
            .collect();
        let k = rows.len();
        let dim = n + k;
        let mut kkt = vec![vec![0.0; dim]; dim];
        let mut rhs = vec![0.0; dim];
        for i in 0..n {
            kkt[i][..n].copy_from_slice(&pd[i]);
            rhs[i] = -prob.c[i];
        }
        for (r, &row) in rows.iter().enumerate() {
            for j in 0..n {
                kkt[n + r][j] = ad[row][j];
                kkt[j][n + r] = ad[row][j];
            }
            rhs[n + r] = prob.b[row];
        }
        let Some(sol) = lu_solve(&kkt, &rhs, 1e-13) else {
            continue;
        };
        let x = sol[..n].to_vec();
        let mut y = vec![0.0; prob.m()];
        for (r, &row) in rows.iter().enumerate() {
            y[row] = sol[n + r];
        }
        let ax = prob.a.spmv(&x).expect("dimensions checked");
        let primal_ok = (0..prob.m()).all(|i| {
            let r = ax[i] - prob.b[i];
            if i < m1 {
                r <= tol
            } else {
                r.abs() <= tol.max(1e-9 * (1.0 + prob.b[i].abs()))
            }
        });
        let dual_ok = y[..m1].iter().all(|&v| v >= -tol);
        if primal_ok && dual_ok {
            return Ok(Iterate { x, y });
        }
    }
    Err(OracleError::NoSolutionFound)
}

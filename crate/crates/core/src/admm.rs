//! The ADMM fixed-point operator T on flat iterates `u = (x, y)`:
//!
//! ```text
//! y⁺ = Π(y + ρ(Ax − b))          Π: clamp inequality rows at zero
//! ȳ  = 2y⁺ − y
//! x⁺ = x − W⁻¹(Px + c + Aᵀȳ),    W = P + ρAᵀA + δI
//! ```
//!
//! T is piecewise affine. On the region where the sign pattern of the
//! pre-projection vector is fixed (an [`ActiveSet`]) it coincides with an
//! affine map `u ↦ G u + h`; [`AdmmOperator::apply_linearized`] applies `G`
//! without forming it. The paired entry point runs T on one channel and the
//! matching `G` on the other through the interleaved kernels.

use thiserror::Error;

use crate::dense::dot;
use crate::qp::{Iterate, QpProblem};
use crate::sparse::{CscMatrix, DualVector, SparseError, SpdFactor};

/// Regularization used when P + ρAᵀA is not numerically positive definite.
pub const FALLBACK_DELTA: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("rho must be positive, got {0}")]
    InvalidRho(f64),
    #[error("factorization of W failed with and without regularization: {0}")]
    FactorizationFailed(SparseError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// Pass-through pattern of the dual projection on the inequality rows:
/// `true` where the pre-projection entry is ≥ 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActiveSet {
    pub mask: Vec<bool>,
}

impl ActiveSet {
    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn count_active(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone)]
pub struct AdmmOperator<'a> {
    prob: &'a QpProblem,
    rho: f64,
    delta: f64,
    w_factor: SpdFactor,
}

impl<'a> AdmmOperator<'a> {
    /// Factorizes P + ρAᵀA, retrying once with δ = 1e-10 on failure.
    pub fn build(prob: &'a QpProblem, rho: f64) -> Result<Self, OperatorError> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(OperatorError::InvalidRho(rho));
        }
        let try_delta = |delta: f64| -> Result<SpdFactor, SparseError> {
            let w = CscMatrix::assemble_regularized_normal(&prob.p, &prob.a, rho, delta)?;
            SpdFactor::factorize(&w)
        };
        let (delta, w_factor) = match try_delta(0.0) {
            Ok(f) => (0.0, f),
            Err(SparseError::NotPositiveDefinite { .. }) => match try_delta(FALLBACK_DELTA) {
                Ok(f) => (FALLBACK_DELTA, f),
                Err(e) => return Err(OperatorError::FactorizationFailed(e)),
            },
            Err(e) => return Err(e.into()),
        };
        Ok(AdmmOperator {
            prob,
            rho,
            delta,
            w_factor,
        })
    }

    pub fn problem(&self) -> &'a QpProblem {
        self.prob
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn factor(&self) -> &SpdFactor {
        &self.w_factor
    }

    /// n + m.
    pub fn dim(&self) -> usize {
        self.prob.dim()
    }

    /// T applied to an [`Iterate`].
    pub fn apply_t(&self, u: &Iterate) -> (Iterate, ActiveSet) {
        let (tu, js) = self.apply(&u.to_flat());
        (Iterate::from_flat(&tu, self.prob.n()), js)
    }

    /// T on a flat iterate. Panics if `u.len() != n + m`.
    pub fn apply(&self, u: &[f64]) -> (Vec<f64>, ActiveSet) {
        let prob = self.prob;
        let (n, m1) = (prob.n(), prob.m1);
        assert_eq!(u.len(), self.dim(), "iterate length");
        let (x, y) = u.split_at(n);

        let ax = prob.a.spmv(x).expect("length checked");
        let mut mask = Vec::with_capacity(m1);
        let mut ybar = vec![0.0; prob.m()];
        let mut y_next = vec![0.0; prob.m()];
        for i in 0..prob.m() {
            let pre = y[i] + self.rho * (ax[i] - prob.b[i]);
            let yp = if i < m1 {
                let pass = pre >= 0.0;
                mask.push(pass);
                if pass {
                    pre
                } else {
                    0.0
                }
            } else {
                pre
            };
            y_next[i] = yp;
            ybar[i] = 2.0 * yp - y[i];
        }

        let px = prob.p.spmv_sym_upper(x).expect("length checked");
        let atyb = prob.a.spmv_transpose(&ybar).expect("length checked");
        let mut rhs: Vec<f64> = (0..n).map(|i| px[i] + prob.c[i] + atyb[i]).collect();
        self.w_factor
            .solve_in_place(&mut rhs)
            .expect("length checked");

        let mut out = Vec::with_capacity(self.dim());
        out.extend(x.iter().zip(&rhs).map(|(xi, si)| xi - si));
        out.extend_from_slice(&y_next);
        (out, ActiveSet { mask })
    }

    /// G_𝒥 q: the pipeline of T with constants dropped and the projection
    /// replaced by the fixed mask of `js` (identity on equality rows).
    pub fn apply_linearized(&self, js: &ActiveSet, q: &[f64]) -> Vec<f64> {
        let prob = self.prob;
        let (n, m1) = (prob.n(), prob.m1);
        assert_eq!(q.len(), self.dim(), "direction length");
        assert_eq!(js.len(), m1, "active set length");
        let (dx, dy) = q.split_at(n);

        let adx = prob.a.spmv(dx).expect("length checked");
        let mut dy_next = vec![0.0; prob.m()];
        let mut dybar = vec![0.0; prob.m()];
        for i in 0..prob.m() {
            let pre = dy[i] + self.rho * adx[i];
            let v = if i < m1 && !js.mask[i] { 0.0 } else { pre };
            dy_next[i] = v;
            dybar[i] = 2.0 * v - dy[i];
        }
        let pdx = prob.p.spmv_sym_upper(dx).expect("length checked");
        let atdy = prob.a.spmv_transpose(&dybar).expect("length checked");
        let mut rhs: Vec<f64> = (0..n).map(|i| pdx[i] + atdy[i]).collect();
        self.w_factor
            .solve_in_place(&mut rhs)
            .expect("length checked");

        let mut out = Vec::with_capacity(self.dim());
        out.extend(dx.iter().zip(&rhs).map(|(xi, si)| xi - si));
        out.extend_from_slice(&dy_next);
        out
    }

    /// One pass computing `T u` on the primary channel and `G_𝒥 q` on the
    /// shadow channel, with 𝒥 observed from `u`. Per channel the results are
    /// bitwise identical to [`Self::apply`] and [`Self::apply_linearized`].
    pub fn apply_paired(&self, u: &[f64], q: &[f64]) -> (Vec<f64>, Vec<f64>, ActiveSet) {
        let prob = self.prob;
        let (n, m, m1) = (prob.n(), prob.m(), prob.m1);
        assert_eq!(u.len(), self.dim(), "iterate length");
        assert_eq!(q.len(), self.dim(), "direction length");

        let xv = DualVector::from_channels(&u[..n], &q[..n]).expect("equal lengths");
        let mut ax = DualVector::zeros(m);
        prob.a
            .spmv_paired_into(&xv, &mut ax)
            .expect("length checked");

        let mut mask = Vec::with_capacity(m1);
        let mut ynext = DualVector::zeros(m);
        let mut ybar = DualVector::zeros(m);
        for i in 0..m {
            let (axp, axs) = ax.get(i);
            let (y, dy) = (u[n + i], q[n + i]);
            let pre = y + self.rho * (axp - prob.b[i]);
            let dpre = dy + self.rho * axs;
            let (yp, dyp) = if i < m1 {
                let pass = pre >= 0.0;
                mask.push(pass);
                if pass {
                    (pre, dpre)
                } else {
                    (0.0, 0.0)
                }
            } else {
                (pre, dpre)
            };
            ynext.set(i, yp, dyp);
            ybar.set(i, 2.0 * yp - y, 2.0 * dyp - dy);
        }

        let mut px = DualVector::zeros(n);
        prob.p
            .spmv_sym_upper_paired_into(&xv, &mut px)
            .expect("length checked");
        let mut aty = DualVector::zeros(n);
        prob.a
            .spmv_transpose_paired_into(&ybar, &mut aty)
            .expect("length checked");
        let mut rhs = DualVector::zeros(n);
        for i in 0..n {
            let (pp, ps) = px.get(i);
            let (ap, as_) = aty.get(i);
            rhs.set(i, pp + prob.c[i] + ap, ps + as_);
        }
        self.w_factor
            .solve_paired_in_place(&mut rhs)
            .expect("length checked");

        let mut tu = Vec::with_capacity(n + m);
        let mut gq = Vec::with_capacity(n + m);
        for i in 0..n {
            let (sp, ss) = rhs.get(i);
            tu.push(u[i] - sp);
            gq.push(q[i] - ss);
        }
        for i in 0..m {
            let (yp, dyp) = ynext.get(i);
            tu.push(yp);
            gq.push(dyp);
        }
        (tu, gq, ActiveSet { mask })
    }

    /// ‖v‖_M with M = [[ρAᵀA + δI, Aᵀ], [A, I/ρ]], evaluated as
    /// ‖√ρ·A dx + dy/√ρ‖² + δ‖dx‖², which expands to the same quadratic form
    /// and cannot go negative through cancellation.
    pub fn m_norm(&self, v: &[f64]) -> f64 {
        let n = self.prob.n();
        assert_eq!(v.len(), self.dim(), "vector length");
        let (dx, dy) = v.split_at(n);
        let adx = self.prob.a.spmv(dx).expect("length checked");
        let sr = self.rho.sqrt();
        let cross: f64 = adx
            .iter()
            .zip(dy)
            .map(|(a, d)| {
                let t = sr * a + d / sr;
                t * t
            })
            .sum();
        (cross + self.delta * dot(dx, dx)).sqrt()
    }

    /// `Tu − u` and the active set observed while applying T.
    pub fn fixed_point_residual(&self, u: &[f64]) -> (Vec<f64>, ActiveSet) {
        let (tu, js) = self.apply(u);
        let r = tu.iter().zip(u).map(|(a, b)| a - b).collect();
        (r, js)
    }
}

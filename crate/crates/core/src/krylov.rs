//! Krylov acceleration of the piecewise-affine ADMM map.
//!
//! Alongside the plain iteration an Arnoldi process is run with the local
//! linearization G_𝒥 observed at each step. With `p` Hessenberg columns the
//! relation (mode `Obv`) is
//!
//! ```text
//! (G − I) Q_p = Q_{p+1} H̃_p        (mode Alt: G Q_p = Q_{p+1} H̃_p)
//! ```
//!
//! and a candidate is obtained from the small least-squares problem
//! `min_z ‖E z + Q_{p+1}ᵀ r_k‖₂`, with `E = H̃_p` (`Obv`) or `H̃_p − [I; 0]`
//! (`Alt`), followed by `û = T(u_k + Q_p z)`.

use thiserror::Error;

use crate::admm::{ActiveSet, AdmmOperator};
use crate::dense::{axpy, dot, norm2};

/// Relative norm drop below which the new Arnoldi vector is treated as zero.
pub const BREAKDOWN_RTOL: f64 = 1e-12;
/// Triangular diagonals below this magnitude make a proposal fail.
pub const SINGULAR_TOL: f64 = 1e-14;
/// A second Gram-Schmidt sweep is made when the first one removes more than
/// this fraction of the vector's norm.
const REORTH_RATIO: f64 = 0.7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KrylovError {
    #[error("invalid Krylov configuration: {0}")]
    InvalidConfig(String),
    #[error("Krylov breakdown: seed residual norm {0:e} is numerically zero")]
    Breakdown(f64),
    #[error("Krylov basis is full ({0} columns)")]
    MemoryFull(usize),
    #[error("no Hessenberg columns available for a proposal")]
    NotEnoughColumns,
    #[error("triangularized least-squares matrix is singular (|R[{index}][{index}]| = {value:e})")]
    SingularTriangle { index: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Which operator generates the Krylov subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KrylovMode {
    /// Arnoldi on G − I.
    Obv,
    /// Arnoldi on G; the least-squares matrix is shifted by the identity.
    Alt,
}

impl std::str::FromStr for KrylovMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "obv" => Ok(KrylovMode::Obv),
            "alt" => Ok(KrylovMode::Alt),
            other => Err(format!(
                "unknown Krylov mode `{other}` (expected obv or alt)"
            )),
        }
    }
}

impl std::fmt::Display for KrylovMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KrylovMode::Obv => "obv",
            KrylovMode::Alt => "alt",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrylovConfig {
    memory: usize,
    tries: Vec<usize>,
    mode: KrylovMode,
}

impl KrylovConfig {
    /// `tries` are the values of the outer pass counter at which a candidate is
    /// proposed. They must lie in `3..=memory + 1` and include `memory + 1`.
    pub fn new(memory: usize, tries: &[usize], mode: KrylovMode) -> Result<Self, KrylovError> {
        if memory < 2 {
            return Err(KrylovError::InvalidConfig(format!(
                "memory must be at least 2, got {memory}"
            )));
        }
        let mut t = tries.to_vec();
        t.sort_unstable();
        t.dedup();
        if t.is_empty() || t.iter().any(|&j| j < 3 || j > memory + 1) {
            return Err(KrylovError::InvalidConfig(format!(
                "attempt set {t:?} must be a nonempty subset of 3..={}",
                memory + 1
            )));
        }
        if t.last() != Some(&(memory + 1)) {
            return Err(KrylovError::InvalidConfig(format!(
                "attempt set {t:?} must contain memory + 1 = {}",
                memory + 1
            )));
        }
        Ok(KrylovConfig {
            memory,
            tries: t,
            mode,
        })
    }

    /// `count` evenly spaced attempts ending at `memory + 1`; with memory 15,
    /// one attempt gives {16} and three give {6, 11, 16}.
    pub fn evenly_spaced(
        memory: usize,
        count: usize,
        mode: KrylovMode,
    ) -> Result<Self, KrylovError> {
        if count == 0 {
            return Err(KrylovError::InvalidConfig(
                "at least one attempt is required".into(),
            ));
        }
        let step = memory / count;
        let tries: Vec<usize> = (0..count)
            .map(|i| memory + 1 - (count - 1 - i) * step)
            .filter(|&j| j >= 3)
            .collect();
        Self::new(memory, &tries, mode)
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn tries(&self) -> &[usize] {
        &self.tries
    }

    pub fn mode(&self) -> KrylovMode {
        self.mode
    }

    pub fn is_attempt(&self, j: usize) -> bool {
        self.tries.binary_search(&j).is_ok()
    }
}

impl Default for KrylovConfig {
    fn default() -> Self {
        KrylovConfig::evenly_spaced(15, 3, KrylovMode::Alt).expect("valid defaults")
    }
}

/// What happened during an Arnoldi step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Extended,
    /// The new vector vanished after orthogonalization; the Hessenberg column
    /// was stored with a zero subdiagonal and the basis is frozen until restart.
    Breakdown,
    /// The basis is empty or already frozen; nothing was done.
    Skipped,
}

/// A Krylov candidate: the least-squares point and T applied to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub u_kr: Vec<f64>,
    pub u_hat: Vec<f64>,
    pub z: Vec<f64>,
}

/// Orthonormal basis Q and Hessenberg matrix H̃ of the (possibly perturbed)
/// Arnoldi process.
#[derive(Debug, Clone)]
pub struct ArnoldiState {
    dim: usize,
    memory: usize,
    mode: KrylovMode,
    q: Vec<Vec<f64>>,
    /// Column c holds H̃[0..=c+1][c].
    h: Vec<Vec<f64>>,
    frozen: bool,
}

/// Rotation (c, s) with `c·a + s·b = r`, `−s·a + c·b = 0`, `r ≥ 0`.
pub fn givens(a: f64, b: f64) -> (f64, f64, f64) {
    let r = a.hypot(b);
    if r == 0.0 {
        return (1.0, 0.0, 0.0);
    }
    (a / r, b / r, r)
}

impl ArnoldiState {
    /// `memory` caps the number of Arnoldi steps (Hessenberg columns) between
    /// restarts.
    pub fn new(dim: usize, memory: usize, mode: KrylovMode) -> Self {
        ArnoldiState {
            dim,
            memory,
            mode,
            q: Vec::with_capacity(memory + 1),
            h: Vec::with_capacity(memory),
            frozen: false,
        }
    }

    pub fn mode(&self) -> KrylovMode {
        self.mode
    }

    /// Number of populated basis columns.
    pub fn num_basis(&self) -> usize {
        self.q.len()
    }

    /// Number of Hessenberg columns, i.e. the dimension of the correction space.
    pub fn num_hessenberg(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.q
    }

    /// Dense H̃ with `p + 1` rows and `p` columns.
    pub fn h_tilde(&self) -> Vec<Vec<f64>> {
        let p = self.h.len();
        let mut out = vec![vec![0.0; p]; p + 1];
        for (c, col) in self.h.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                out[i][c] = v;
            }
        }
        out
    }

    /// Zeroes Q and H.
    pub fn restart(&mut self) {
        self.q.clear();
        self.h.clear();
        self.frozen = false;
    }

    /// Starts a fresh basis from the residual `r0`.
    pub fn init_basis(&mut self, r0: &[f64]) -> Result<(), KrylovError> {
        self.check_dim(r0.len())?;
        self.restart();
        let nrm = norm2(r0);
        if !(nrm > 1e-14 * self.dim as f64) {
            return Err(KrylovError::Breakdown(nrm));
        }
        self.q.push(r0.iter().map(|v| v / nrm).collect());
        Ok(())
    }

    /// Last basis vector, the input to the next Arnoldi step.
    pub fn last_vector(&self) -> Option<&[f64]> {
        if self.frozen {
            return None;
        }
        self.q.last().map(|v| v.as_slice())
    }

    /// Arnoldi step computing G_𝒥 q itself.
    pub fn arnoldi_step(
        &mut self,
        op: &AdmmOperator<'_>,
        js: &ActiveSet,
    ) -> Result<StepOutcome, KrylovError> {
        let Some(q) = self.last_vector() else {
            return Ok(StepOutcome::Skipped);
        };
        let gq = op.apply_linearized(js, q);
        self.extend(gq)
    }

    /// Arnoldi step given `g_q = G_𝒥 q` for the last basis vector q, e.g. from
    /// the shadow channel of [`AdmmOperator::apply_paired`].
    pub fn extend(&mut self, mut g_q: Vec<f64>) -> Result<StepOutcome, KrylovError> {
        self.check_dim(g_q.len())?;
        if self.frozen || self.q.is_empty() {
            return Ok(StepOutcome::Skipped);
        }
        if self.h.len() >= self.memory {
            return Err(KrylovError::MemoryFull(self.memory));
        }
        if self.mode == KrylovMode::Obv {
            let last = self.q.last().expect("nonempty");
            axpy(-1.0, last, &mut g_q);
        }
        let w = &mut g_q;
        let k = self.q.len();
        let pre = norm2(w);
        let mut coeffs = vec![0.0; k + 1];
        let mut before = pre;
        for _sweep in 0..2 {
            for (i, qi) in self.q.iter().enumerate() {
                let hij = dot(qi, w);
                axpy(-hij, qi, w);
                coeffs[i] += hij;
            }
            let after = norm2(w);
            if after > REORTH_RATIO * before {
                break;
            }
            before = after;
        }
        let post = norm2(w);
        if !(post > BREAKDOWN_RTOL * pre) || post == 0.0 {
            coeffs[k] = 0.0;
            self.h.push(coeffs);
            self.frozen = true;
            return Ok(StepOutcome::Breakdown);
        }
        coeffs[k] = post;
        self.h.push(coeffs);
        w.iter_mut().for_each(|v| *v /= post);
        self.q.push(g_q);
        Ok(StepOutcome::Extended)
    }

    /// Least-squares coefficients `z` for the current residual `r_k`.
    pub fn solve_least_squares(&self, r_k: &[f64]) -> Result<Vec<f64>, KrylovError> {
        self.check_dim(r_k.len())?;
        let p = self.h.len();
        if p == 0 {
            return Err(KrylovError::NotEnoughColumns);
        }
        let mut e = self.h_tilde();
        if self.mode == KrylovMode::Alt {
            for (c, row) in e.iter_mut().enumerate().take(p) {
                row[c] -= 1.0;
            }
        }
        // minimize ‖E z − g‖ with g = −Qᵀ r_k; a frozen basis has an implicit
        // zero column p + 1
        let mut g: Vec<f64> = (0..=p)
            .map(|i| self.q.get(i).map_or(0.0, |qi| -dot(qi, r_k)))
            .collect();
        for c in 0..p {
            let (cs, sn, r) = givens(e[c][c], e[c + 1][c]);
            e[c][c] = r;
            e[c + 1][c] = 0.0;
            for col in c + 1..p {
                let (a, b) = (e[c][col], e[c + 1][col]);
                e[c][col] = cs * a + sn * b;
                e[c + 1][col] = -sn * a + cs * b;
            }
            let (a, b) = (g[c], g[c + 1]);
            g[c] = cs * a + sn * b;
            g[c + 1] = -sn * a + cs * b;
        }
        for (c, row) in e.iter().enumerate().take(p) {
            if row[c].abs() < SINGULAR_TOL {
                return Err(KrylovError::SingularTriangle {
                    index: c,
                    value: row[c],
                });
            }
        }
        let mut z = vec![0.0; p];
        for c in (0..p).rev() {
            let s: f64 = (c + 1..p).map(|j| e[c][j] * z[j]).sum();
            z[c] = (g[c] - s) / e[c][c];
        }
        Ok(z)
    }

    /// `u_k + Q_p z`.
    pub fn combine(&self, u_k: &[f64], z: &[f64]) -> Vec<f64> {
        let mut u = u_k.to_vec();
        for (qi, &zi) in self.q.iter().zip(z) {
            axpy(zi, qi, &mut u);
        }
        u
    }

    /// Candidate `û = T(u_k + Q_p z)` with z from the Hessenberg least squares.
    /// `r_k` must be `T u_k − u_k`.
    pub fn propose(
        &self,
        op: &AdmmOperator<'_>,
        u_k: &[f64],
        r_k: &[f64],
    ) -> Result<Proposal, KrylovError> {
        self.check_dim(u_k.len())?;
        let z = self.solve_least_squares(r_k)?;
        let u_kr = self.combine(u_k, &z);
        let (u_hat, _) = op.apply(&u_kr);
        Ok(Proposal { u_kr, u_hat, z })
    }

    /// max |QᵀQ − I| over populated columns.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, qi) in self.q.iter().enumerate() {
            for (j, qj) in self.q.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(qi, qj) - target).abs());
            }
        }
        worst
    }

    /// max-norm of `(G − I) Q_p − Q_{p+1} H̃_p` (mode `Obv`) or
    /// `G Q_p − Q_{p+1} H̃_p` (mode `Alt`) for a fixed active set.
    pub fn relation_defect(&self, op: &AdmmOperator<'_>, js: &ActiveSet) -> f64 {
        let mut worst = 0.0f64;
        for (c, hc) in self.h.iter().enumerate() {
            let mut lhs = op.apply_linearized(js, &self.q[c]);
            if self.mode == KrylovMode::Obv {
                axpy(-1.0, &self.q[c], &mut lhs);
            }
            for (i, &hic) in hc.iter().enumerate() {
                if let Some(qi) = self.q.get(i) {
                    axpy(-hic, qi, &mut lhs);
                }
            }
            worst = worst.max(crate::dense::norm_inf(&lhs));
        }
        worst
    }

    fn check_dim(&self, got: usize) -> Result<(), KrylovError> {
        if got != self.dim {
            return Err(KrylovError::DimensionMismatch {
                expected: self.dim,
                got,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qp::QpProblem;
    use crate::sparse::CscMatrix;

    #[test]
    fn givens_examples() {
        assert_eq!(givens(3.0, 4.0), (0.6, 0.8, 5.0));
        assert_eq!(givens(1.0, 0.0), (1.0, 0.0, 1.0));
        assert_eq!(givens(0.0, 2.0), (0.0, 1.0, 2.0));
        assert_eq!(givens(0.0, 0.0), (1.0, 0.0, 0.0));
        let (c, s, r) = givens(-2.0, 1.5);
        assert!((c * -2.0 + s * 1.5 - r).abs() < 1e-15);
        assert!((-s * -2.0 + c * 1.5).abs() < 1e-15);
        assert!((c * c + s * s - 1.0).abs() < 1e-15 && r >= 0.0);
    }

    #[test]
    fn init_examples() {
        let mut st = ArnoldiState::new(2, 4, KrylovMode::Obv);
        st.init_basis(&[3.0, 4.0]).unwrap();
        assert_eq!(st.basis()[0], vec![0.6, 0.8]);
        let mut st = ArnoldiState::new(3, 4, KrylovMode::Obv);
        st.init_basis(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(st.basis()[0], vec![1.0, 0.0, 0.0]);
        assert!(matches!(
            st.init_basis(&[0.0; 3]),
            Err(KrylovError::Breakdown(_))
        ));
        assert!(st.is_empty());
    }

    /// Scalar affine map through the public extend/solve API: Tu = 0.5u + 1.
    #[test]
    fn scalar_map_obv_and_alt() {
        for (mode, h11) in [(KrylovMode::Obv, -0.5), (KrylovMode::Alt, 0.5)] {
            let mut st = ArnoldiState::new(1, 4, mode);
            st.init_basis(&[1.0]).unwrap();
            let out = st.extend(vec![0.5]).unwrap();
            assert_eq!(out, StepOutcome::Breakdown);
            let h = st.h_tilde();
            assert_eq!(h, vec![vec![h11], vec![0.0]]);
            // u1 = 1, r1 = T(1) - 1 = 0.5
            let z = st.solve_least_squares(&[0.5]).unwrap();
            assert!((z[0] - 1.0).abs() < 1e-15);
            assert!((st.combine(&[1.0], &z)[0] - 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn restart_is_idempotent() {
        let mut st = ArnoldiState::new(2, 3, KrylovMode::Alt);
        st.init_basis(&[1.0, 1.0]).unwrap();
        st.extend(vec![0.3, -0.2]).unwrap();
        st.restart();
        assert!(st.is_empty() && st.num_hessenberg() == 0);
        assert_eq!(st.orthonormality_defect(), 0.0);
        st.restart();
        assert!(st.is_empty() && !st.is_frozen());
        assert_eq!(
            st.solve_least_squares(&[1.0, 0.0]),
            Err(KrylovError::NotEnoughColumns)
        );
    }

    #[test]
    fn config_validation() {
        assert!(KrylovConfig::new(15, &[16], KrylovMode::Alt).is_ok());
        assert!(KrylovConfig::new(15, &[6, 11], KrylovMode::Alt).is_err());
        assert!(KrylovConfig::new(15, &[2, 16], KrylovMode::Alt).is_err());
        assert!(KrylovConfig::new(1, &[2], KrylovMode::Alt).is_err());
        let c = KrylovConfig::evenly_spaced(15, 3, KrylovMode::Alt).unwrap();
        assert_eq!(c.tries(), &[6, 11, 16]);
        let c = KrylovConfig::evenly_spaced(15, 1, KrylovMode::Obv).unwrap();
        assert_eq!(c.tries(), &[16]);
        assert!(c.is_attempt(16) && !c.is_attempt(15));
    }

    #[test]
    fn memory_cap_is_enforced() {
        // memory counts Hessenberg columns; the basis holds one more vector
        let mut st = ArnoldiState::new(4, 2, KrylovMode::Alt);
        st.init_basis(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(
            st.extend(vec![0.0, 1.0, 0.0, 0.0]).unwrap(),
            StepOutcome::Extended
        );
        assert_eq!(
            st.extend(vec![0.0, 0.0, 1.0, 0.0]).unwrap(),
            StepOutcome::Extended
        );
        assert_eq!((st.num_basis(), st.num_hessenberg()), (3, 2));
        assert_eq!(
            st.extend(vec![0.0, 0.0, 0.0, 1.0]),
            Err(KrylovError::MemoryFull(2))
        );
    }

    #[test]
    fn singular_triangle_is_reported() {
        // Obv with G = I gives (G − I) q = 0: zero Hessenberg column
        let mut st = ArnoldiState::new(2, 4, KrylovMode::Obv);
        st.init_basis(&[1.0, 0.0]).unwrap();
        assert_eq!(st.extend(vec![1.0, 0.0]).unwrap(), StepOutcome::Breakdown);
        assert!(matches!(
            st.solve_least_squares(&[1.0, 0.0]),
            Err(KrylovError::SingularTriangle { index: 0, .. })
        ));
    }

    #[test]
    fn diagonal_operator_alt_relation() {
        // Equality-constrained toy whose linearization we only need to be
        // linear; check the relation against apply_linearized.
        let prob = QpProblem::new(
            CscMatrix::from_dense(&[vec![2.0, 0.0], vec![0.0, 1.0]]),
            vec![1.0, -1.0],
            CscMatrix::from_dense(&[vec![1.0, 1.0]]),
            vec![1.0],
            0,
            1,
        )
        .unwrap();
        let op = AdmmOperator::build(&prob, 0.1).unwrap();
        let js = ActiveSet { mask: vec![] };
        for mode in [KrylovMode::Obv, KrylovMode::Alt] {
            let mut st = ArnoldiState::new(3, 5, mode);
            st.init_basis(&[1.0, 0.5, -0.25]).unwrap();
            for _ in 0..3 {
                st.arnoldi_step(&op, &js).unwrap();
            }
            assert!(st.orthonormality_defect() < 1e-12);
            assert!(st.relation_defect(&op, &js) < 1e-12);
        }
    }
}

//! Sparse convex QP solver built on a piecewise-affine ADMM operator, with
//! safeguarded Anderson and Krylov (Arnoldi/GMRES-style) acceleration.
//!
//! ```
//! use qpaccel::{solve, CscMatrix, QpProblem, SolverSettings, Status};
//!
//! // minimize ½x² − x  subject to  x ≤ 2
//! let prob = QpProblem::new(
//!     CscMatrix::from_dense(&[vec![1.0]]),
//!     vec![-1.0],
//!     CscMatrix::from_dense(&[vec![1.0]]),
//!     vec![2.0],
//!     1,
//!     0,
//! )
//! .unwrap();
//! let report = solve(&prob, &SolverSettings::default()).unwrap();
//! assert_eq!(report.status, Status::Solved);
//! assert!((report.final_iterate.x[0] - 1.0).abs() < 1e-4);
//! ```

pub mod admm;
pub mod anderson;
pub mod batch;
pub mod dense;
pub mod driver;
pub mod krylov;
pub mod qp;
pub mod sparse;

pub use admm::{ActiveSet, AdmmOperator, OperatorError};
pub use anderson::{AndersonConfig, AndersonError, AndersonState};
pub use driver::{
    run, safeguard_check, solve, Accelerator, AcceptedStep, Observer, SafeguardParams, SolveReport,
    SolverSettings, Status,
};
pub use krylov::{ArnoldiState, KrylovConfig, KrylovError, KrylovMode};
pub use qp::{
    is_solved, kkt_oracle, project_dual_cone, residuals, Iterate, QpProblem, ResidualTriple,
    TerminationConfig,
};
pub use sparse::{CscMatrix, DualVector, SparseError, SpdFactor};

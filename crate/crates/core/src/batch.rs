//! Independent solves over many (problem, settings) cells.
//!
//! With the `parallel` feature (default) [`solve_all`] fans out over a rayon
//! pool; without it, it falls back to [`solve_all_sequential`]. Results are
//! always returned in input order.

use crate::admm::OperatorError;
use crate::driver::{solve, SolveReport, SolverSettings};
use crate::qp::QpProblem;

/// One unit of work.
#[derive(Debug, Clone, Copy)]
pub struct Job<'a> {
    pub problem: &'a QpProblem,
    pub settings: &'a SolverSettings,
}

pub type JobResult = Result<SolveReport, OperatorError>;

pub fn solve_all_sequential(jobs: &[Job<'_>]) -> Vec<JobResult> {
    jobs.iter().map(|j| solve(j.problem, j.settings)).collect()
}

#[cfg(feature = "parallel")]
pub fn solve_all(jobs: &[Job<'_>]) -> Vec<JobResult> {
    use rayon::prelude::*;
    jobs.par_iter()
        .map(|j| solve(j.problem, j.settings))
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub fn solve_all(jobs: &[Job<'_>]) -> Vec<JobResult> {
    solve_all_sequential(jobs)
}

/// Order-preserving map over a slice, parallel when the feature is enabled.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(usize, &T) -> R,
{
    items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

/// Whether [`solve_all`] runs in parallel in this build.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

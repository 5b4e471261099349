//! Safeguarded outer loop shared by the plain, Anderson, and Krylov solvers.

use crate::admm::{ActiveSet, AdmmOperator, OperatorError};
use crate::anderson::{AndersonConfig, AndersonState};
use crate::dense::sub;
use crate::krylov::{ArnoldiState, KrylovConfig};
use crate::qp::{is_solved, residuals, Iterate, QpProblem, ResidualTriple, TerminationConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum Accelerator {
    None,
    Anderson(AndersonConfig),
    Krylov(KrylovConfig),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafeguardParams {
    /// Required contraction of the M-norm fixed-point residual, in (0, 1].
    pub eta: f64,
    /// Optional bound `‖û − u_k‖_M ≤ c ‖T u_k − u_k‖_M`.
    pub step_bound: Option<f64>,
}

impl Default for SafeguardParams {
    fn default() -> Self {
        SafeguardParams {
            eta: 1.0,
            step_bound: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub rho: f64,
    pub accel: Accelerator,
    pub term: TerminationConfig,
    pub safeguard: SafeguardParams,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            rho: 0.1,
            accel: Accelerator::None,
            term: TerminationConfig::default(),
            safeguard: SafeguardParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Solved,
    MaxIters,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Solved => "solved",
            Status::MaxIters => "max_iters",
        })
    }
}

/// M-norm fixed-point residuals around an accepted proposal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptedStep {
    /// Outer iteration k at which the proposal was accepted.
    pub iteration: usize,
    /// ‖T u_k − u_k‖_M
    pub before: f64,
    /// ‖T u_{k+1} − u_{k+1}‖_M
    pub after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: Status,
    pub iterations: usize,
    pub t_applications: usize,
    pub accepted: usize,
    pub rejected: usize,
    /// Proposals that could not be formed (singular least squares, too few
    /// columns); not counted as accepted or rejected.
    pub failed_proposals: usize,
    pub restarts: usize,
    pub residual_trace: Vec<(usize, ResidualTriple)>,
    pub accepted_steps: Vec<AcceptedStep>,
    pub final_iterate: Iterate,
    /// Regularization used in W.
    pub delta: f64,
}

impl SolveReport {
    pub fn final_residuals(&self) -> Option<ResidualTriple> {
        self.residual_trace.last().map(|(_, r)| *r)
    }
}

/// Hooks into the outer loop, used for diagnostics.
pub trait Observer {
    fn on_arnoldi(
        &mut self,
        _iteration: usize,
        _op: &AdmmOperator<'_>,
        _state: &ArnoldiState,
        _active: &ActiveSet,
    ) {
    }
}

impl Observer for () {}

#[derive(Debug, Clone, PartialEq)]
pub struct SafeguardOutcome {
    pub accept: bool,
    /// T û, the next iterate on acceptance.
    pub t_u_hat: Vec<f64>,
    /// ‖T û − û‖_M
    pub candidate_residual: f64,
    /// ‖T u_k − u_k‖_M
    pub current_residual: f64,
}

/// Safeguard test for a candidate `û` against the current point `u_k`.
pub fn safeguard_check(
    op: &AdmmOperator<'_>,
    u_k: &[f64],
    u_hat: &[f64],
    params: &SafeguardParams,
) -> SafeguardOutcome {
    let (tu, _) = op.apply(u_k);
    safeguard_check_with(op, u_k, &tu, u_hat, params)
}

/// As [`safeguard_check`] with `T u_k` already available.
pub fn safeguard_check_with(
    op: &AdmmOperator<'_>,
    u_k: &[f64],
    tu_k: &[f64],
    u_hat: &[f64],
    params: &SafeguardParams,
) -> SafeguardOutcome {
    let (t_u_hat, _) = op.apply(u_hat);
    let candidate_residual = op.m_norm(&sub(&t_u_hat, u_hat));
    let current_residual = op.m_norm(&sub(tu_k, u_k));
    let mut accept = candidate_residual <= params.eta * current_residual;
    if let Some(c) = params.step_bound {
        accept &= op.m_norm(&sub(u_hat, u_k)) <= c * current_residual;
    }
    SafeguardOutcome {
        accept,
        t_u_hat,
        candidate_residual,
        current_residual,
    }
}

/// Builds the operator and runs the solver from a cold start.
pub fn solve(prob: &QpProblem, settings: &SolverSettings) -> Result<SolveReport, OperatorError> {
    let op = AdmmOperator::build(prob, settings.rho)?;
    Ok(run(&op, settings, &mut ()))
}

struct Loop<'o, 'p> {
    op: &'o AdmmOperator<'p>,
    report: SolveReport,
    /// Bound from the last accepted step, awaiting T u_{k+1}.
    pending: Option<(usize, f64)>,
}

impl Loop<'_, '_> {
    fn apply(&mut self, u: &[f64]) -> (Vec<f64>, ActiveSet) {
        self.report.t_applications += 1;
        self.op.apply(u)
    }

    fn settle_pending(&mut self, u: &[f64], tu: &[f64]) {
        if let Some((iteration, before)) = self.pending.take() {
            let after = self.op.m_norm(&sub(tu, u));
            self.report.accepted_steps.push(AcceptedStep {
                iteration,
                before,
                after,
            });
        }
    }

    /// Evaluates a candidate and returns the next iterate.
    fn safeguarded_step(
        &mut self,
        k: usize,
        u: &[f64],
        tu: Vec<f64>,
        u_hat: &[f64],
        params: &SafeguardParams,
    ) -> Vec<f64> {
        self.report.t_applications += 1;
        let sg = safeguard_check_with(self.op, u, &tu, u_hat, params);
        if sg.accept {
            self.report.accepted += 1;
            self.pending = Some((k, sg.current_residual));
            sg.t_u_hat
        } else {
            self.report.rejected += 1;
            tu
        }
    }
}

/// Runs the safeguarded iteration from u₀ = 0.
///
/// Each outer pass applies T once; with Krylov acceleration that application
/// also carries the Arnoldi step. Proposals cost two extra applications for
/// Krylov (T u_Kr and T û) and one for Anderson (T û). Residuals are checked
/// every `term.check_every` passes.
pub fn run(
    op: &AdmmOperator<'_>,
    settings: &SolverSettings,
    observer: &mut dyn Observer,
) -> SolveReport {
    let prob = op.problem();
    let (n, d) = (prob.n(), prob.dim());
    let term = settings.term;
    let sg = settings.safeguard;
    let mut lp = Loop {
        op,
        report: SolveReport {
            status: Status::MaxIters,
            iterations: 0,
            t_applications: 0,
            accepted: 0,
            rejected: 0,
            failed_proposals: 0,
            restarts: 0,
            residual_trace: Vec::new(),
            accepted_steps: Vec::new(),
            final_iterate: Iterate::zeros(n, prob.m()),
            delta: op.delta(),
        },
        pending: None,
    };

    let mut u = vec![0.0; d];
    let mut krylov = match &settings.accel {
        Accelerator::Krylov(cfg) => Some((cfg, ArnoldiState::new(d, cfg.memory(), cfg.mode()))),
        _ => None,
    };
    let mut anderson = match &settings.accel {
        Accelerator::Anderson(cfg) => Some((cfg, AndersonState::new(d, cfg))),
        _ => None,
    };
    let mut block_start = u.clone();
    let mut block_len = 0usize;

    let mut k = 0usize;
    let mut j = 1usize;
    let check_every = term.check_every.max(1);
    let mut last_check = None;
    while k < term.max_iters {
        let mut force_check = false;
        if let Some((cfg, state)) = krylov.as_mut() {
            if j == 1 {
                let (tu, _) = lp.apply(&u);
                lp.settle_pending(&u, &tu);
                if state.init_basis(&sub(&tu, &u)).is_err() {
                    force_check = true;
                }
                u = tu;
            } else {
                // the Arnoldi step rides along with T u_k on every later pass
                let tu = match state.last_vector() {
                    Some(q) => {
                        lp.report.t_applications += 1;
                        let (tu, gq, js) = op.apply_paired(&u, q);
                        // cannot be full: the basis restarts after pass memory + 1
                        let _ = state.extend(gq);
                        observer.on_arnoldi(k, op, state, &js);
                        tu
                    }
                    None => lp.apply(&u).0,
                };
                lp.settle_pending(&u, &tu);
                u = if cfg.is_attempt(j) && state.num_hessenberg() > 0 {
                    let r = sub(&tu, &u);
                    match state.propose(op, &u, &r) {
                        Ok(prop) => {
                            lp.report.t_applications += 1;
                            lp.safeguarded_step(k, &u, tu, &prop.u_hat, &sg)
                        }
                        Err(_) => {
                            lp.report.failed_proposals += 1;
                            tu
                        }
                    }
                } else {
                    tu
                };
                if j > cfg.memory() {
                    state.restart();
                    lp.report.restarts += 1;
                    j = 0;
                }
            }
        } else if let Some((cfg, state)) = anderson.as_mut() {
            let (tu, _) = lp.apply(&u);
            lp.settle_pending(&u, &tu);
            block_len += 1;
            if block_len == cfg.interval() {
                block_len = 0;
                state
                    .update(&block_start, &tu)
                    .expect("iterates have the operator dimension");
                u = if state.num_differences() >= 1 {
                    match state.propose() {
                        Ok(prop) => lp.safeguarded_step(k, &u, tu, &prop.u_hat, &sg),
                        Err(_) => {
                            lp.report.failed_proposals += 1;
                            tu
                        }
                    }
                } else {
                    tu
                };
                block_start.clone_from(&u);
            } else {
                u = tu;
            }
        } else {
            let (tu, _) = lp.apply(&u);
            u = tu;
        }

        k += 1;
        j += 1;
        if force_check || k.is_multiple_of(check_every) || k == term.max_iters {
            let it = Iterate::from_flat(&u, n);
            let res = residuals(prob, &it);
            lp.report.residual_trace.push((k, res));
            last_check = Some(k);
            if is_solved(&res, term.eps) {
                lp.report.status = Status::Solved;
                break;
            }
        }
    }
    if last_check != Some(k) {
        let res = residuals(prob, &Iterate::from_flat(&u, n));
        lp.report.residual_trace.push((k, res));
        if is_solved(&res, term.eps) {
            lp.report.status = Status::Solved;
        }
    }
    if lp.pending.is_some() {
        // diagnostic only; not charged to the run
        let (tu, _) = op.apply(&u);
        lp.settle_pending(&u, &tu);
    }
    lp.report.iterations = k;
    lp.report.final_iterate = Iterate::from_flat(&u, n);
    lp.report
}

//! Solver × problem benchmark matrix.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{Context, Result};
use qpaccel::batch::map_indexed;
use qpaccel::{
    solve, Accelerator, AndersonConfig, KrylovConfig, KrylovMode, QpProblem, SolveReport,
    SolverSettings, Status, TerminationConfig,
};

use crate::profile::PerfProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Iterations,
    TApplications,
    WallTime,
}

impl FromStr for Measure {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "iters" => Ok(Measure::Iterations),
            "tapps" => Ok(Measure::TApplications),
            "time" => Ok(Measure::WallTime),
            _ => Err(format!("unknown measure {s:?} (iters, tapps, time)")),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::Iterations => "iters",
            Measure::TApplications => "tapps",
            Measure::WallTime => "time",
        })
    }
}

#[derive(Debug, Clone)]
pub struct NamedSolver {
    pub name: String,
    pub accel: Accelerator,
}

/// Plain ADMM, Anderson with interval 1 and 10, and Krylov (alt) with one and
/// three attempts per cycle, all with memory 15.
pub fn default_solvers() -> Vec<NamedSolver> {
    let aa = |s| Accelerator::Anderson(AndersonConfig::new(15, s).expect("valid"));
    let kr = |t| {
        Accelerator::Krylov(KrylovConfig::evenly_spaced(15, t, KrylovMode::Alt).expect("valid"))
    };
    vec![
        NamedSolver {
            name: "none".into(),
            accel: Accelerator::None,
        },
        NamedSolver {
            name: "anderson-i1".into(),
            accel: aa(1),
        },
        NamedSolver {
            name: "anderson-i10".into(),
            accel: aa(10),
        },
        NamedSolver {
            name: "krylov-alt-t1".into(),
            accel: kr(1),
        },
        NamedSolver {
            name: "krylov-alt-t3".into(),
            accel: kr(3),
        },
    ]
}

#[derive(Debug, Clone)]
pub struct NamedProblem {
    pub name: String,
    pub kind: String,
    pub problem: QpProblem,
}

#[derive(Debug, Clone)]
pub struct BenchMatrix {
    pub problems: Vec<NamedProblem>,
    pub solvers: Vec<NamedSolver>,
    pub rho: f64,
    pub term: TerminationConfig,
    /// Timed repetitions per cell; the fastest is reported.
    pub wall_reps: usize,
    pub parallel: bool,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub problem: usize,
    pub solver: usize,
    pub report: SolveReport,
    pub wall_ms: f64,
}

impl CellResult {
    pub fn solved(&self) -> bool {
        self.report.status == Status::Solved
    }

    /// Budget spent, ∞ when unsolved.
    pub fn budget(&self, measure: Measure) -> f64 {
        if !self.solved() {
            return f64::INFINITY;
        }
        match measure {
            Measure::Iterations => self.report.iterations as f64,
            Measure::TApplications => self.report.t_applications as f64,
            Measure::WallTime => self.wall_ms,
        }
    }
}

impl BenchMatrix {
    pub fn new(problems: Vec<NamedProblem>, solvers: Vec<NamedSolver>, eps: f64) -> Self {
        assert!(
            !problems.is_empty() && !solvers.is_empty(),
            "empty bench matrix"
        );
        BenchMatrix {
            problems,
            solvers,
            rho: 0.1,
            term: TerminationConfig {
                eps,
                ..TerminationConfig::default()
            },
            wall_reps: 2,
            parallel: true,
        }
    }

    fn settings(&self, solver: usize) -> SolverSettings {
        SolverSettings {
            rho: self.rho,
            accel: self.solvers[solver].accel.clone(),
            term: self.term,
            ..Default::default()
        }
    }

    fn run_cell(&self, problem: usize, solver: usize) -> Result<CellResult> {
        let settings = self.settings(solver);
        let prob = &self.problems[problem].problem;
        let mut best = f64::INFINITY;
        let mut report = None;
        for _ in 0..self.wall_reps.max(1) {
            let t0 = Instant::now();
            let rep = solve(prob, &settings).with_context(|| {
                format!("building the operator for {}", self.problems[problem].name)
            })?;
            best = best.min(t0.elapsed().as_secs_f64() * 1e3);
            report.get_or_insert(rep);
        }
        Ok(CellResult {
            problem,
            solver,
            report: report.expect("at least one repetition"),
            wall_ms: best,
        })
    }

    /// Runs every cell; results are ordered problem-major regardless of
    /// scheduling.
    pub fn run(&self) -> Result<Vec<CellResult>> {
        let cells: Vec<(usize, usize)> = (0..self.problems.len())
            .flat_map(|p| (0..self.solvers.len()).map(move |s| (p, s)))
            .collect();
        let results: Vec<Result<CellResult>> = if self.parallel {
            map_indexed(&cells, |_, &(p, s)| self.run_cell(p, s))
        } else {
            cells.iter().map(|&(p, s)| self.run_cell(p, s)).collect()
        };
        results.into_iter().collect()
    }

    pub fn profile(&self, results: &[CellResult], measure: Measure) -> PerfProfile {
        let ns = self.solvers.len();
        let mut times = vec![vec![f64::INFINITY; ns]; self.problems.len()];
        for r in results {
            times[r.problem][r.solver] = r.budget(measure);
        }
        PerfProfile::new(&times)
    }

    pub fn write_runs_csv<W: std::io::Write>(&self, results: &[CellResult], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "problem",
            "kind",
            "n",
            "m",
            "solver",
            "eps",
            "status",
            "iterations",
            "t_applications",
            "accepted",
            "rejected",
            "wall_ms",
            "r_p",
            "r_d",
            "pd",
        ])?;
        for r in results {
            let p = &self.problems[r.problem];
            let res = r.report.final_residuals().unwrap_or_default();
            w.write_record([
                p.name.clone(),
                p.kind.clone(),
                p.problem.n().to_string(),
                p.problem.m().to_string(),
                self.solvers[r.solver].name.clone(),
                format!("{:e}", self.term.eps),
                r.report.status.to_string(),
                r.report.iterations.to_string(),
                r.report.t_applications.to_string(),
                r.report.accepted.to_string(),
                r.report.rejected.to_string(),
                format!("{:.3}", r.wall_ms),
                format!("{:e}", res.r_p),
                format!("{:e}", res.r_d),
                format!("{:e}", res.pd),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_profile_csv<W: std::io::Write>(
        &self,
        profile: &PerfProfile,
        points: usize,
        out: W,
    ) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["tau".to_string()];
        header.extend(self.solvers.iter().map(|s| s.name.clone()));
        w.write_record(&header)?;
        for row in profile.sample(points) {
            w.write_record(row.iter().map(|v| format!("{v}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_outputs(
        &self,
        results: &[CellResult],
        measure: Measure,
        dir: &Path,
    ) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let tag = format!("eps{:e}", self.term.eps);
        let runs = dir.join(format!("runs_{tag}.csv"));
        self.write_runs_csv(results, std::fs::File::create(&runs)?)
            .with_context(|| format!("writing {}", runs.display()))?;
        let prof = dir.join(format!("profile_{tag}_{measure}.csv"));
        self.write_profile_csv(
            &self.profile(results, measure),
            100,
            std::fs::File::create(&prof)?,
        )
        .with_context(|| format!("writing {}", prof.display()))?;
        Ok(())
    }
}

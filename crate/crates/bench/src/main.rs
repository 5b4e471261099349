use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use qpaccel::{
    solve, Accelerator, AndersonConfig, KrylovConfig, KrylovMode, QpProblem, SolverSettings,
    TerminationConfig,
};
use qpaccel_bench::{
    default_solvers, default_suite, microbench, BenchMatrix, GenSpec, Kind, Measure, NamedProblem,
};

#[derive(Parser)]
#[command(
    name = "qpaccel",
    about = "Accelerated ADMM for sparse convex QPs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AccelArg {
    None,
    Anderson,
    Krylov,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded instance and write it as JSON.
    Gen {
        #[arg(long, value_parser = parse_kind)]
        kind: Kind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Variables (random_qp, equality_qp).
        #[arg(long, default_value_t = 20)]
        n: usize,
        /// Constraint rows (random_qp, default 30) or equality rows
        /// (equality_qp, default 10).
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0.15)]
        density: f64,
        #[arg(long, default_value_t = 20)]
        horizon: usize,
        #[arg(long, default_value_t = 20)]
        features: usize,
        #[arg(long, default_value_t = 40)]
        samples: usize,
        /// Lasso weight (default: a fifth of the zero-solution threshold).
        #[arg(long)]
        lambda: Option<f64>,
        /// Huber threshold.
        #[arg(long, default_value_t = 1.0)]
        huber_m: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve an instance file.
    Solve {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = AccelArg::None)]
        accel: AccelArg,
        #[arg(long, default_value = "alt")]
        mode: KrylovMode,
        /// Krylov attempts per memory cycle.
        #[arg(long, default_value_t = 3)]
        tries: usize,
        /// Anderson interval.
        #[arg(long, default_value_t = 1)]
        interval: usize,
        #[arg(long, default_value_t = 15)]
        memory: usize,
        #[arg(long, default_value_t = 0.1)]
        rho: f64,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, default_value_t = 20_000)]
        max_iters: usize,
        #[arg(long, default_value_t = 25)]
        check_every: usize,
        /// Residual trace CSV.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the solver matrix on a suite and write run and profile CSVs.
    Bench {
        #[arg(long, default_value = "default")]
        suite: String,
        #[arg(long, value_delimiter = ',', default_value = "1e-3,1e-6")]
        eps: Vec<f64>,
        #[arg(long, default_value = "tapps")]
        measure: Measure,
        #[arg(long, default_value_t = 20_000)]
        max_iters: usize,
        /// Run cells one at a time (cleaner wall times).
        #[arg(long)]
        sequential: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time single- against paired-channel kernels.
    Microbench {
        #[arg(long, default_value_t = 100_000)]
        nnz_min: usize,
        #[arg(long, default_value_t = 50)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_kind(s: &str) -> Result<Kind, String> {
    s.parse()
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen {
            kind,
            seed,
            n,
            m,
            density,
            horizon,
            features,
            samples,
            lambda,
            huber_m,
            out,
        } => {
            let m = m.unwrap_or(GenSpec::new(kind, seed).m);
            if kind == Kind::EqualityQp && m >= n {
                anyhow::bail!("equality_qp needs --m < --n (got m = {m}, n = {n})");
            }
            let spec = GenSpec {
                kind,
                seed,
                n,
                m,
                density,
                horizon,
                features,
                samples,
                lambda,
                huber_m,
            };
            let prob = spec.generate();
            fs::write(&out, prob.to_json())
                .with_context(|| format!("writing {}", out.display()))?;
            println!(
                "{}: n = {}, m = {} (m1 = {}, m2 = {})",
                spec.label(),
                prob.n(),
                prob.m(),
                prob.m1,
                prob.m2
            );
        }
        Command::Solve {
            file,
            accel,
            mode,
            tries,
            interval,
            memory,
            rho,
            eps,
            max_iters,
            check_every,
            report,
        } => {
            let text =
                fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let prob = QpProblem::from_json(&text)?;
            let accel = match accel {
                AccelArg::None => Accelerator::None,
                AccelArg::Anderson => Accelerator::Anderson(AndersonConfig::new(memory, interval)?),
                AccelArg::Krylov => {
                    Accelerator::Krylov(KrylovConfig::evenly_spaced(memory, tries, mode)?)
                }
            };
            if eps <= 0.0 || check_every == 0 {
                bail!("eps must be positive and check-every at least 1");
            }
            let settings = SolverSettings {
                rho,
                accel,
                term: TerminationConfig {
                    eps,
                    max_iters,
                    check_every,
                },
                ..Default::default()
            };
            let rep = solve(&prob, &settings)?;
            let res = rep.final_residuals().unwrap_or_default();
            println!(
                "status {} iterations {} t_applications {} accepted {} rejected {}",
                rep.status, rep.iterations, rep.t_applications, rep.accepted, rep.rejected
            );
            println!(
                "r_p {:e} r_d {:e} pd {:e} objective {:e}",
                res.r_p,
                res.r_d,
                res.pd,
                prob.objective(&rep.final_iterate.x)
            );
            if let Some(path) = report {
                let mut w = csv::Writer::from_path(&path)
                    .with_context(|| format!("writing {}", path.display()))?;
                w.write_record(["iteration", "r_p", "r_d", "pd"])?;
                for (k, r) in &rep.residual_trace {
                    w.write_record([
                        k.to_string(),
                        format!("{:e}", r.r_p),
                        format!("{:e}", r.r_d),
                        format!("{:e}", r.pd),
                    ])?;
                }
                w.flush()?;
            }
        }
        Command::Bench {
            suite,
            eps,
            measure,
            max_iters,
            sequential,
            out,
        } => {
            if suite != "default" {
                bail!("unknown suite {suite:?}; only \"default\" is built in");
            }
            let problems: Vec<NamedProblem> = default_suite()
                .into_iter()
                .map(|s| NamedProblem {
                    name: s.label(),
                    kind: s.kind.to_string(),
                    problem: s.generate(),
                })
                .collect();
            for e in eps {
                let mut matrix = BenchMatrix::new(problems.clone(), default_solvers(), e);
                matrix.term.max_iters = max_iters;
                matrix.parallel = !sequential;
                let results = matrix.run()?;
                matrix.write_outputs(&results, measure, &out)?;
                let prof = matrix.profile(&results, measure);
                println!(
                    "eps {e:e}: {} of {} problems solved by some solver",
                    prof.n_solved,
                    problems.len()
                );
                for (s, solver) in matrix.solvers.iter().enumerate() {
                    let solved = results
                        .iter()
                        .filter(|r| r.solver == s && r.solved())
                        .count();
                    println!(
                        "  {:<14} solved {solved:>3}  P(1) = {:.3}",
                        solver.name,
                        prof.fraction(s, 1.0)
                    );
                }
            }
        }
        Command::Microbench {
            nnz_min,
            reps,
            seed,
            out,
        } => {
            let rows = microbench::run(nnz_min, reps, seed);
            microbench::write_csv(&rows, fs::File::create(&out)?)?;
            for r in &rows {
                println!(
                    "{:<24} {:<13} nnz {:>8}  ratio {:.3}",
                    r.matrix,
                    r.op,
                    r.nnz,
                    r.ratio()
                );
            }
        }
    }
    Ok(())
}

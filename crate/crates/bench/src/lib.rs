//! Instance generators, benchmark matrix runner, performance profiles and
//! kernel micro-benchmarks behind the `qpaccel` command-line tool.

pub mod generate;
pub mod microbench;
pub mod profile;
pub mod runner;

pub use generate::{default_suite, GenSpec, Kind};
pub use profile::PerfProfile;
pub use runner::{default_solvers, BenchMatrix, CellResult, Measure, NamedProblem, NamedSolver};

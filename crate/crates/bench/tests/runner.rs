use qpaccel::{CscMatrix, DualVector, SpdFactor};
use qpaccel_bench::{
    default_solvers, microbench, BenchMatrix, GenSpec, Kind, Measure, NamedProblem,
};

fn small_matrix(parallel: bool) -> BenchMatrix {
    let problems = Kind::ALL
        .iter()
        .enumerate()
        .map(|(i, &kind)| {
            let mut s = GenSpec::new(kind, i as u64);
            s.n = 8;
            s.m = if kind == Kind::EqualityQp { 3 } else { 10 };
            s.horizon = 6;
            s.features = 4;
            s.samples = 8;
            NamedProblem {
                name: s.label(),
                kind: kind.to_string(),
                problem: s.generate(),
            }
        })
        .collect();
    let mut m = BenchMatrix::new(problems, default_solvers(), 1e-5);
    m.parallel = parallel;
    m.wall_reps = 1;
    m
}

fn strip_wall(csv: &str) -> String {
    csv.lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f.remove(11);
            f.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn runs_are_deterministic_and_order_stable() {
    let a = small_matrix(true);
    let b = small_matrix(false);
    let ra = a.run().unwrap();
    let rb = b.run().unwrap();
    let mut ca = Vec::new();
    let mut cb = Vec::new();
    a.write_runs_csv(&ra, &mut ca).unwrap();
    b.write_runs_csv(&rb, &mut cb).unwrap();
    let (ca, cb) = (
        String::from_utf8(ca).unwrap(),
        String::from_utf8(cb).unwrap(),
    );
    assert_eq!(strip_wall(&ca), strip_wall(&cb));
    assert!(ca.starts_with("problem,kind,n,m,solver,eps,status,iterations,t_applications"));
    assert_eq!(ca.lines().count(), 1 + 5 * default_solvers().len());
    for (i, r) in ra.iter().enumerate() {
        assert_eq!((r.problem, r.solver), (i / 5, i % 5));
    }

    for measure in [Measure::Iterations, Measure::TApplications] {
        let mut pa = Vec::new();
        let mut pb = Vec::new();
        a.write_profile_csv(&a.profile(&ra, measure), 30, &mut pa)
            .unwrap();
        b.write_profile_csv(&b.profile(&rb, measure), 30, &mut pb)
            .unwrap();
        assert_eq!(pa, pb);
    }
}

#[test]
fn everything_solves_on_small_instances() {
    let m = small_matrix(true);
    let results = m.run().unwrap();
    assert!(results.iter().all(|r| r.solved()));
    let prof = m.profile(&results, Measure::TApplications);
    assert_eq!(prof.n_solved, 5);
    assert!(results.iter().all(|r| r.wall_ms >= 0.0));
}

#[test]
fn microbench_identity_outputs_match_spmv() {
    let id = CscMatrix::identity(64);
    let x: Vec<f64> = (0..64).map(|i| i as f64 - 3.5).collect();
    let s: Vec<f64> = (0..64).map(|i| (i * i) as f64).collect();
    let dv = DualVector::from_channels(&x, &s).unwrap();
    let out = id.spmv_paired(&dv).unwrap();
    assert_eq!(out.primary(), id.spmv(&x).unwrap());
    assert_eq!(out.shadow(), id.spmv(&s).unwrap());
    assert_eq!(out.primary(), x);
    let f = SpdFactor::factorize(&id).unwrap();
    assert_eq!(f.solve_paired(&dv).unwrap(), dv);
}

#[test]
fn microbench_rows_meet_size_floor() {
    let rows = microbench::run(5_000, 3, 1);
    assert_eq!(rows.len(), 10);
    for r in &rows {
        assert!(r.nnz >= 5_000, "{}: {}", r.matrix, r.nnz);
        assert!(r.single_ns > 0.0 && r.paired_ns > 0.0);
    }
    let mut buf = Vec::new();
    microbench::write_csv(&rows, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 11);
}

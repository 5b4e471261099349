mod common;

use common::{max_abs_diff, norm_inf, small_qp};
use qpaccel::batch::{solve_all, solve_all_sequential, Job};
use qpaccel::{
    kkt_oracle, residuals, run, solve, Accelerator, AdmmOperator, AndersonConfig, Iterate,
    KrylovConfig, KrylovMode, SolverSettings, Status, TerminationConfig,
};

fn tight(max_iters: usize) -> TerminationConfig {
    TerminationConfig {
        eps: 1e-8,
        max_iters,
        check_every: 25,
    }
}

#[test]
fn plain_admm_matches_oracle() {
    for seed in 0..25u64 {
        let n = 2 + seed as usize % 5;
        let m1 = 1 + seed as usize % 8;
        let prob = small_qp(seed, n, m1, 0, 0.1);
        let star = kkt_oracle(&prob, 1e-9).unwrap();
        let settings = SolverSettings {
            term: tight(100_000),
            ..Default::default()
        };
        let rep = solve(&prob, &settings).unwrap();
        assert_eq!(rep.status, Status::Solved, "seed {seed}");
        let err = max_abs_diff(&rep.final_iterate.x, &star.x);
        assert!(err <= 1e-4, "seed {seed}: {err}");
    }
}

#[test]
fn oracle_points_are_fixed_points_with_zero_residuals() {
    for seed in 0..20u64 {
        let prob = small_qp(seed, 4, 5, 1, 0.1);
        let star = kkt_oracle(&prob, 1e-10).unwrap();
        let op = AdmmOperator::build(&prob, 0.1).unwrap();
        let (next, _) = op.apply_t(&star);
        assert!(max_abs_diff(&next.x, &star.x) <= 1e-9);
        assert!(max_abs_diff(&next.y, &star.y) <= 1e-9);
        let (r, _) = op.fixed_point_residual(&star.to_flat());
        assert!(norm_inf(&r) <= 1e-9);
        let res = residuals(&prob, &star);
        assert!(res.max() <= 1e-9, "{res:?}");
    }
}

#[test]
fn plain_run_is_the_plain_trajectory() {
    let prob = small_qp(3, 5, 4, 2, 0.1);
    let op = AdmmOperator::build(&prob, 0.1).unwrap();
    let settings = SolverSettings {
        term: TerminationConfig {
            eps: 1e-300,
            max_iters: 137,
            check_every: 25,
        },
        ..Default::default()
    };
    let rep = run(&op, &settings, &mut ());
    let mut u = vec![0.0; op.dim()];
    for _ in 0..137 {
        u = op.apply(&u).0;
    }
    assert_eq!(rep.final_iterate, Iterate::from_flat(&u, 5));
    assert_eq!(rep.t_applications, 137);
    assert_eq!(rep.accepted + rep.rejected, 0);
}

fn accelerated_settings() -> Vec<SolverSettings> {
    let term = TerminationConfig {
        eps: 1e-6,
        max_iters: 20_000,
        check_every: 25,
    };
    let mut out = vec![];
    for interval in [1, 10] {
        out.push(SolverSettings {
            accel: Accelerator::Anderson(AndersonConfig::new(15, interval).unwrap()),
            term,
            ..Default::default()
        });
    }
    for (mode, tries) in [
        (KrylovMode::Alt, 3),
        (KrylovMode::Obv, 3),
        (KrylovMode::Alt, 1),
    ] {
        out.push(SolverSettings {
            accel: Accelerator::Krylov(KrylovConfig::evenly_spaced(15, tries, mode).unwrap()),
            term,
            ..Default::default()
        });
    }
    out
}

#[test]
fn accelerated_runs_solve_and_respect_safeguard() {
    for seed in 0..6u64 {
        let prob = small_qp(40 + seed, 8, 10, 3, 0.05);
        let star = kkt_oracle(&prob, 1e-9).unwrap();
        for s in accelerated_settings() {
            let rep = solve(&prob, &s).unwrap();
            assert_eq!(rep.status, Status::Solved, "seed {seed} {:?}", s.accel);
            assert!(
                max_abs_diff(&rep.final_iterate.x, &star.x) <= 1e-2 * (1.0 + norm_inf(&star.x))
            );
            assert_eq!(rep.accepted_steps.len(), rep.accepted);
            for st in &rep.accepted_steps {
                assert!(st.after <= st.before + 1e-12, "{st:?}");
            }
        }
    }
}

#[test]
fn t_application_accounting() {
    let prob = small_qp(9, 4, 3, 1, 0.1);
    let term = TerminationConfig {
        eps: 1e-300,
        max_iters: 16,
        check_every: 25,
    };
    let kr = SolverSettings {
        accel: Accelerator::Krylov(KrylovConfig::new(15, &[6, 11, 16], KrylovMode::Alt).unwrap()),
        term,
        ..Default::default()
    };
    let rep = solve(&prob, &kr).unwrap();
    // 16 passes, 3 attempts at two extra applications each
    let proposals = rep.accepted + rep.rejected;
    assert_eq!(proposals + rep.failed_proposals, 3);
    assert_eq!(rep.t_applications, 16 + 2 * proposals);

    let aa = SolverSettings {
        accel: Accelerator::Anderson(AndersonConfig::new(15, 1).unwrap()),
        term,
        ..Default::default()
    };
    let rep = solve(&prob, &aa).unwrap();
    let proposals = rep.accepted + rep.rejected;
    assert_eq!(proposals + rep.failed_proposals, 15);
    assert_eq!(rep.t_applications, 16 + proposals);
}

#[test]
fn vacuous_tolerance_stops_at_first_check() {
    let prob = small_qp(2, 3, 2, 1, 0.1);
    let settings = SolverSettings {
        term: TerminationConfig {
            eps: 1e10,
            ..TerminationConfig::default()
        },
        ..Default::default()
    };
    let rep = solve(&prob, &settings).unwrap();
    assert_eq!(rep.status, Status::Solved);
    assert!(rep.iterations <= 25);
}

#[test]
fn batch_paths_agree() {
    let probs: Vec<_> = (0..8).map(|s| small_qp(s, 4, 4, 1, 0.1)).collect();
    let settings = accelerated_settings();
    let jobs: Vec<Job> = probs
        .iter()
        .flat_map(|p| {
            settings.iter().map(move |s| Job {
                problem: p,
                settings: s,
            })
        })
        .collect();
    let a = solve_all(&jobs);
    let b = solve_all_sequential(&jobs);
    assert_eq!(a.len(), jobs.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.as_ref().unwrap(), y.as_ref().unwrap());
    }
}

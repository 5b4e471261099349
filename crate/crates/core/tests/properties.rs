mod common;

use common::{max_abs_diff, norm_inf, small_qp};
use proptest::prelude::*;
use qpaccel::{project_dual_cone, AdmmOperator, CscMatrix, DualVector, SpdFactor};

fn vec_strategy(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, len)
}

proptest! {
    #[test]
    fn projection_is_idempotent_and_lipschitz(
        (v, w, m1) in (1usize..12).prop_flat_map(|m| (vec_strategy(m), vec_strategy(m), 0..=m))
    ) {
        let m2 = v.len() - m1;
        let pv = project_dual_cone(&v, m1, m2);
        prop_assert_eq!(project_dual_cone(&pv, m1, m2), pv.clone());
        let pw = project_dual_cone(&w, m1, m2);
        let d_in: f64 = v.iter().zip(&w).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let d_out: f64 = pv.iter().zip(&pw).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!(d_out <= d_in + 1e-15);
    }

    #[test]
    fn csc_from_triplets_is_well_formed(
        trips in prop::collection::vec((0usize..7, 0usize..5, -3.0f64..3.0), 0..40)
    ) {
        let a = CscMatrix::from_triplets(7, 5, &trips).unwrap();
        prop_assert!(a.check().is_ok());
        let dense = a.to_dense();
        let mut expect = vec![vec![0.0; 5]; 7];
        for &(i, j, v) in &trips {
            expect[i][j] += v;
        }
        for i in 0..7 {
            for j in 0..5 {
                prop_assert!((dense[i][j] - expect[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn paired_spmv_is_channelwise_exact(
        seed in 0u64..1000,
        x in vec_strategy(9),
        s in vec_strategy(9),
    ) {
        let mut r = common::rng(seed);
        let a = CscMatrix::from_dense(
            &(0..6).map(|_| {
                common::uniform_vec(&mut r, 9, 1.0)
                    .into_iter()
                    .map(|v| if v.abs() < 0.6 { 0.0 } else { v })
                    .collect()
            })
            .collect::<Vec<_>>(),
        );
        let dv = DualVector::from_channels(&x, &s).unwrap();
        let out = a.spmv_paired(&dv).unwrap();
        prop_assert_eq!(out.primary(), a.spmv(&x).unwrap());
        prop_assert_eq!(out.shadow(), a.spmv(&s).unwrap());
        let y: Vec<f64> = x[..6].to_vec();
        let t: Vec<f64> = s[..6].to_vec();
        let dt = DualVector::from_channels(&y, &t).unwrap();
        let out = a.spmv_transpose_paired(&dt).unwrap();
        prop_assert_eq!(out.primary(), a.spmv_transpose(&y).unwrap());
        prop_assert_eq!(out.shadow(), a.spmv_transpose(&t).unwrap());
    }

    #[test]
    fn factor_solve_accuracy(seed in 0u64..1000, n in 1usize..15) {
        let prob = small_qp(seed, n, 0, 0, 1e-2);
        let f = SpdFactor::factorize(&prob.p).unwrap();
        let mut r = common::rng(seed ^ 0xabc);
        let rhs = common::uniform_vec(&mut r, n, 5.0);
        let x = f.solve(&rhs).unwrap();
        let back = prob.p.spmv_sym_upper(&x).unwrap();
        prop_assert!(max_abs_diff(&back, &rhs) / (1.0 + norm_inf(&rhs)) <= 1e-10);
    }

    #[test]
    fn operator_is_nonexpansive_in_m_norm(
        seed in 0u64..500,
        u in vec_strategy(12),
        v in vec_strategy(12),
    ) {
        // n = 4, m1 = 5, m2 = 3
        let prob = small_qp(seed, 4, 5, 3, 0.0);
        let op = AdmmOperator::build(&prob, 0.1).unwrap();
        let (tu, _) = op.apply(&u);
        let (tv, _) = op.apply(&v);
        let lhs = op.m_norm(&sub(&tu, &tv));
        let rhs = op.m_norm(&sub(&u, &v));
        prop_assert!(lhs <= rhs + 1e-10, "{} > {}", lhs, rhs);
    }

    #[test]
    fn same_active_set_means_exact_linearization(
        seed in 0u64..500,
        u in vec_strategy(10),
        q in vec_strategy(10),
        scale in 1e-6f64..1.0,
    ) {
        let prob = small_qp(seed, 4, 4, 2, 1e-3);
        let op = AdmmOperator::build(&prob, 0.1).unwrap();
        let uq: Vec<f64> = u.iter().zip(&q).map(|(a, b)| a + scale * b).collect();
        let (tu, js_u) = op.apply(&u);
        let (tuq, js_uq) = op.apply(&uq);
        prop_assume!(js_u == js_uq);
        let dq: Vec<f64> = q.iter().map(|v| scale * v).collect();
        let lin = op.apply_linearized(&js_u, &dq);
        let diff = sub(&tuq, &tu);
        prop_assert!(max_abs_diff(&diff, &lin) <= 1e-10 * (1.0 + norm_inf(&tu)));
    }

    #[test]
    fn equality_operator_is_affine(
        seed in 0u64..500,
        u in vec_strategy(7),
        v in vec_strategy(7),
        alpha in -2.0f64..2.0,
    ) {
        let prob = small_qp(seed, 4, 0, 3, 1e-2);
        let op = AdmmOperator::build(&prob, 0.1).unwrap();
        let mix: Vec<f64> = u.iter().zip(&v).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect();
        let (tu, _) = op.apply(&u);
        let (tv, _) = op.apply(&v);
        let (tm, _) = op.apply(&mix);
        let expect: Vec<f64> = tu.iter().zip(&tv).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect();
        prop_assert!(max_abs_diff(&tm, &expect) <= 1e-10 * (1.0 + norm_inf(&expect)));
    }

    #[test]
    fn paired_operator_matches_single_channel(
        seed in 0u64..500,
        u in vec_strategy(9),
        q in vec_strategy(9),
    ) {
        let prob = small_qp(seed, 3, 4, 2, 1e-2);
        let op = AdmmOperator::build(&prob, 0.1).unwrap();
        let (tu, gq, js) = op.apply_paired(&u, &q);
        let (tu1, js1) = op.apply(&u);
        prop_assert_eq!(&tu, &tu1);
        prop_assert_eq!(&js, &js1);
        prop_assert_eq!(gq, op.apply_linearized(&js, &q));
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[test]
fn finite_difference_matches_linearization() {
    let mut checked = 0;
    for seed in 0..400u64 {
        let prob = small_qp(seed, 5, 6, 2, 1e-2);
        let op = AdmmOperator::build(&prob, 0.1).unwrap();
        let mut r = common::rng(seed + 10_000);
        let u = common::uniform_vec(&mut r, 13, 3.0);
        let q = common::uniform_vec(&mut r, 13, 1.0);
        let eps = 1e-7;
        let up: Vec<f64> = u.iter().zip(&q).map(|(a, b)| a + eps * b).collect();
        let (tu, js) = op.apply(&u);
        let (tup, jsp) = op.apply(&up);
        if js != jsp {
            continue;
        }
        let fd: Vec<f64> = tup.iter().zip(&tu).map(|(a, b)| (a - b) / eps).collect();
        let lin = op.apply_linearized(&js, &q);
        assert!(max_abs_diff(&fd, &lin) <= 1e-6 * (1.0 + norm_inf(&q)));
        checked += 1;
        if checked == 100 {
            break;
        }
    }
    assert_eq!(checked, 100);
}

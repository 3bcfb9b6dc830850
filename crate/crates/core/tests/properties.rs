use num_complex::Complex64;
use proptest::prelude::*;
use rankone::certificates::{cd_constants, rip_to_nsp, sparsity_threshold, theorem2_bound};
use rankone::diagnostics::psi_r_estimate;
use rankone::diagnostics::tails::fourth_order_poly;
use rankone::ensemble::MeasurementEnsemble;
use rankone::experiments::{fmt_float, trial_seed, NRule};
use rankone::numerics::{
    best_s_term_residual, frobenius_inner, hermitian_embed, hermitian_unembed, p_vectorize,
    ComplexMatrix,
};

fn complex() -> impl Strategy<Value = Complex64> {
    (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b)| Complex64::new(a, b))
}

fn square(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec(complex(), n * n)
        .prop_map(move |d| ComplexMatrix::from_row_major(n, n, d).unwrap())
}

fn sized_square() -> impl Strategy<Value = ComplexMatrix> {
    (2usize..7).prop_flat_map(square)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn p_norm_counts_off_diagonal(m in sized_square()) {
        let n = m.rows();
        let p = p_vectorize(&m).unwrap();
        prop_assert_eq!(p.len(), 2 * n * (n - 1));
        let lhs: f64 = p.iter().map(|v| v * v).sum();
        let mut rhs = 0.0;
        for (i, z) in m.as_slice().iter().enumerate() {
            if i / n != i % n {
                rhs += 2.0 * z.norm_sqr();
            }
        }
        prop_assert!(close(lhs, rhs, 1e-12));
    }

    #[test]
    fn embedding_is_an_isometry(m in sized_square()) {
        let h = m.hermitian_part().unwrap();
        let v = hermitian_embed(&h);
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(close(norm, h.frobenius_norm(), 1e-12));
        let back = hermitian_unembed(&v, h.rows()).unwrap();
        prop_assert!(back.sub(&h).unwrap().frobenius_norm() <= 1e-12 * h.frobenius_norm().max(1.0));
    }

    #[test]
    fn adjoint_identity(
        n in 2usize..6,
        count in 1usize..9,
        seed in any::<u64>(),
    ) {
        let mut state = seed;
        let mut next = move || {
            state = trial_seed(state, 1, 2, 3);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let vectors: Vec<Vec<Complex64>> =
            (0..count).map(|_| (0..n).map(|_| Complex64::new(next(), next())).collect()).collect();
        let e = MeasurementEnsemble::from_vectors(vectors).unwrap();
        let x: Vec<f64> = (0..count).map(|_| next()).collect();
        let t = ComplexMatrix::from_fn(n, n, |_, _| Complex64::new(next(), next())).hermitian_part().unwrap();
        let lhs = frobenius_inner(&e.forward(&x).unwrap(), &t).unwrap();
        let rhs: f64 = x.iter().zip(e.adjoint(&t).unwrap()).map(|(a, b)| a * b).sum();
        prop_assert!(lhs.im.abs() < 1e-10);
        prop_assert!(close(lhs.re, rhs, 1e-10));
    }

    #[test]
    fn fourth_order_poly_matches_p(a in (2usize..8).prop_flat_map(|n| prop::collection::vec(complex(), n))) {
        let p = p_vectorize(&ComplexMatrix::outer(&a)).unwrap();
        let direct: f64 = p.iter().map(|v| v * v).sum();
        let stacked: Vec<f64> = a.iter().map(|z| z.re).chain(a.iter().map(|z| z.im)).collect();
        prop_assert!(close(fourth_order_poly(&stacked).unwrap(), direct, 1e-10));
    }

    #[test]
    fn best_s_term_is_nonincreasing(x in prop::collection::vec(-5.0f64..5.0, 1..20)) {
        let mut prev = f64::INFINITY;
        for s in 0..=x.len() {
            let r = best_s_term_residual(&x, s).unwrap();
            prop_assert!(r <= prev + 1e-12);
            prev = r;
        }
        prop_assert_eq!(best_s_term_residual(&x, x.len()).unwrap(), 0.0);
    }

    #[test]
    fn psi_is_positively_homogeneous(
        x in prop::collection::vec(-4.0f64..4.0, 1000..1200),
        c in 0.01f64..100.0,
        r in 1.0f64..3.0,
    ) {
        let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
        let a = psi_r_estimate(&x, r, 8).unwrap();
        let b = psi_r_estimate(&scaled, r, 8).unwrap();
        prop_assert!(close(b, c * a, 1e-10));
        prop_assert!(psi_r_estimate(&x, r + 0.5, 8).unwrap() >= a - 1e-12);
    }

    #[test]
    fn nsp_constants_grow_with_delta(d1 in 0.01f64..0.6, d2 in 0.01f64..0.6) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let a = rip_to_nsp(lo, 1).unwrap();
        let b = rip_to_nsp(hi, 1).unwrap();
        prop_assert!(a.rho <= b.rho && a.tau <= b.tau);
        let (ca, da) = cd_constants(a.rho).unwrap();
        let (cb, db) = cd_constants(b.rho).unwrap();
        prop_assert!(ca <= cb && da <= db);
    }

    #[test]
    fn threshold_monotone_in_alpha(n in 4usize..40, a1 in 0.01f64..1.0, a2 in 0.01f64..1.0) {
        let count = 4 * n * (n - 1);
        let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
        let t_lo = sparsity_threshold(n, count, lo).unwrap();
        let t_hi = sparsity_threshold(n, count, hi).unwrap();
        prop_assert!(t_lo <= t_hi);
    }

    #[test]
    fn bound_grows_with_noise(e1 in 0.0f64..10.0, e2 in 0.0f64..10.0, s in 1usize..50) {
        let c = (11.36, 15.55, 3.07);
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let a = theorem2_bound(c, 0.0, lo, 20, s, 2.0).unwrap().total;
        let b = theorem2_bound(c, 0.0, hi, 20, s, 2.0).unwrap().total;
        prop_assert!(a <= b);
    }

    #[test]
    fn fmt_float_round_trips(x in prop::num::f64::NORMAL | prop::num::f64::ZERO) {
        prop_assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn n_rule_round_trips(k in 1usize..9) {
        let rule: NRule = format!("{k}m").parse().unwrap();
        prop_assert_eq!(rule.count(10), k * 2 * 10 * 9);
        let fixed: NRule = format!("{}", 100 + k).parse().unwrap();
        prop_assert_eq!(fixed.count(10), 100 + k);
    }
}

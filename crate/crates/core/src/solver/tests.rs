use super::*;
use crate::ensemble::{sample_ensemble, SparseNonnegSignal, SubgaussianLaw};
use crate::numerics::frobenius_inner;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exhaustive oracle: for every free set F solve the normal equations of the
/// columns in F (built from Frobenius inner products of the rank-one
/// matrices) and keep the best nonnegative solution.
pub(crate) fn enumeration_oracle(e: &MeasurementEnsemble, y: &ComplexMatrix) -> (Vec<f64>, f64) {
    let count = e.len();
    let outers: Vec<ComplexMatrix> = e.vectors().map(ComplexMatrix::outer).collect();
    let gram = DMatrix::from_fn(count, count, |i, j| {
        frobenius_inner(&outers[i], &outers[j]).unwrap().re
    });
    let rhs: Vec<f64> = outers
        .iter()
        .map(|o| frobenius_inner(o, y).unwrap().re)
        .collect();
    let mut best = (vec![0.0; count], y.frobenius_norm());
    for mask in 1u32..(1 << count) {
        let free: Vec<usize> = (0..count).filter(|i| mask & (1 << i) != 0).collect();
        let k = free.len();
        let g = DMatrix::from_fn(k, k, |r, c| gram[(free[r], free[c])]);
        let r = nalgebra::DVector::from_iterator(k, free.iter().map(|&i| rhs[i]));
        let Some(z) = g.lu().solve(&r) else { continue };
        if z.iter().any(|&v| v < 0.0) {
            continue;
        }
        let mut x = vec![0.0; count];
        for (idx, &i) in free.iter().enumerate() {
            x[i] = z[idx];
        }
        let obj = e.forward(&x).unwrap().sub(y).unwrap().frobenius_norm();
        if obj < best.1 {
            best = (x, obj);
        }
    }
    best
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
    .hermitian_part()
    .unwrap()
}

fn noisy_instance(seed: u64, n: usize, count: usize) -> (MeasurementEnsemble, ComplexMatrix) {
    let e = sample_ensemble(n, count, SubgaussianLaw::gaussian(), seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
    let x: Vec<f64> = (0..count)
        .map(|_| {
            if rng.random_bool(0.4) {
                rng.random_range(0.0..2.0)
            } else {
                0.0
            }
        })
        .collect();
    let y = e
        .forward(&x)
        .unwrap()
        .add(&random_hermitian(&mut rng, n).scaled(1.5))
        .unwrap();
    (e, y)
}

#[test]
fn zero_datum_gives_zero() {
    let e = sample_ensemble(4, 10, SubgaussianLaw::gaussian(), 1).unwrap();
    for alg in [Algorithm::ActiveSet, Algorithm::ProjectedGradient] {
        let rep = solve_nnls(
            &e,
            &ComplexMatrix::zeros(4, 4),
            &SolverConfig::with_algorithm(alg),
        )
        .unwrap();
        assert!(rep.x_sharp.iter().all(|&v| v == 0.0));
        assert!(rep.converged);
    }
}

#[test]
fn noiseless_sparse_recovery() {
    let e = sample_ensemble(20, 100, SubgaussianLaw::gaussian(), 2024).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let signal = SparseNonnegSignal::random(100, 3, &mut rng).unwrap();
    let x = signal.to_dense();
    let y = e.forward(&x).unwrap();
    for alg in [Algorithm::ActiveSet, Algorithm::ProjectedGradient] {
        let mut rep = solve_nnls(&e, &y, &SolverConfig::with_algorithm(alg)).unwrap();
        rep.attach_ground_truth(&x).unwrap();
        assert!(rep.converged, "{alg:?} did not converge");
        assert!(
            rep.error_l2().unwrap() <= 1e-4,
            "{alg:?}: {}",
            rep.error_l2().unwrap()
        );
    }
}

#[test]
fn active_set_matches_enumeration_oracle() {
    for seed in 0..15u64 {
        let count = 6 + (seed as usize % 7);
        let (e, y) = noisy_instance(seed, 4, count);
        let (_, oracle) = enumeration_oracle(&e, &y);
        let rep = solve_nnls(&e, &y, &SolverConfig::default()).unwrap();
        assert!(
            (rep.residual_frobenius - oracle).abs() <= 1e-8,
            "seed {seed}: {} vs {oracle}",
            rep.residual_frobenius
        );
        assert!(
            rep.kkt_residual <= 1e-9,
            "seed {seed}: kkt {}",
            rep.kkt_residual
        );
        assert!(rep.converged);
    }
}

#[test]
fn residual_is_recomputed_from_forward_map() {
    let (e, y) = noisy_instance(77, 5, 20);
    let rep = solve_nnls(&e, &y, &SolverConfig::default()).unwrap();
    let direct = e
        .forward(&rep.x_sharp)
        .unwrap()
        .sub(&y)
        .unwrap()
        .frobenius_norm();
    assert!((rep.residual_frobenius - direct).abs() <= 1e-10 * direct.max(1.0));
    assert!(rep.x_sharp.iter().all(|&v| v >= 0.0));
}

#[test]
fn algorithms_agree() {
    for seed in 0..4u64 {
        let (e, y) = noisy_instance(100 + seed, 6, 30);
        let a = solve_nnls(&e, &y, &SolverConfig::with_algorithm(Algorithm::ActiveSet)).unwrap();
        let cfg = SolverConfig {
            max_iterations: 200_000,
            ..SolverConfig::with_algorithm(Algorithm::ProjectedGradient)
        };
        let b = solve_nnls(&e, &y, &cfg).unwrap();
        let (fa, fb) = (a.residual_frobenius.powi(2), b.residual_frobenius.powi(2));
        assert!(
            (fa - fb).abs() <= 1e-7 * fa.max(1e-300),
            "seed {seed}: {fa} vs {fb}"
        );
    }
}

#[test]
fn projected_gradient_objective_is_monotone() {
    let (e, y) = noisy_instance(8, 6, 30);
    let cfg = SolverConfig {
        record_objective: true,
        ..SolverConfig::with_algorithm(Algorithm::ProjectedGradient)
    };
    let rep = solve_nnls(&e, &y, &cfg).unwrap();
    assert!(rep.objective_trace.len() > 2);
    for w in rep.objective_trace.windows(2) {
        assert!(
            w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0),
            "{} -> {}",
            w[0],
            w[1]
        );
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (e, y) = noisy_instance(31, 4, 7);
    let z: Vec<f64> = (0..7).map(|_| rng.random_range(0.0..1.0)).collect();
    let half_obj = |z: &[f64]| {
        0.5 * e
            .forward(z)
            .unwrap()
            .sub(&y)
            .unwrap()
            .frobenius_norm()
            .powi(2)
    };
    let residual = e.forward(&z).unwrap().sub(&y).unwrap();
    let grad = e.adjoint(&residual).unwrap();
    let h = 1e-5;
    for i in 0..7 {
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[i] += h;
        zm[i] -= h;
        let fd = (half_obj(&zp) - half_obj(&zm)) / (2.0 * h);
        assert!(
            (fd - grad[i]).abs() <= 1e-5 * grad[i].abs().max(1.0),
            "coord {i}: {fd} vs {}",
            grad[i]
        );
    }
}

#[test]
fn kkt_residual_examples() {
    let (e, y) = noisy_instance(3, 4, 8);
    let (x_opt, _) = enumeration_oracle(&e, &y);
    assert!(kkt_residual(&e, &y, &x_opt).unwrap() <= 1e-9);

    let x = [0.5, 0.0, 1.0, 0.0, 0.0, 2.0, 0.0, 0.3];
    let clean = e.forward(&x).unwrap();
    assert!(kkt_residual(&e, &clean, &[0.0; 8]).unwrap() > 0.0);

    let z = [0.1, 0.2, 0.0, 0.4, 0.0, 0.0, 0.7, 0.0];
    let r1 = kkt_residual(&e, &y, &z).unwrap();
    let t = 37.5;
    let zt: Vec<f64> = z.iter().map(|v| v * t).collect();
    let r2 = kkt_residual(&e, &y.scaled(t), &zt).unwrap();
    assert!((r1 - r2).abs() <= 1e-10 * r1.max(1.0));

    assert!(matches!(
        kkt_residual(&e, &y, &[-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
        Err(Error::Contract(_))
    ));
}

#[test]
fn minimizer_dominates_truth() {
    for seed in 0..5u64 {
        let e = sample_ensemble(6, 40, SubgaussianLaw::gaussian(), seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = SparseNonnegSignal::random(40, 4, &mut rng)
            .unwrap()
            .to_dense();
        let noise = random_hermitian(&mut rng, 6).scaled(0.3);
        let y = e.forward(&x).unwrap().add(&noise).unwrap();
        let rep = solve_nnls(&e, &y, &SolverConfig::default()).unwrap();
        assert!(rep.residual_frobenius <= noise.frobenius_norm() + 1e-9);
    }
}

#[test]
fn warm_candidate_is_never_beaten_by_worse_answer() {
    let (e, y) = noisy_instance(12, 5, 25);
    let (x_opt, _) = {
        let rep = solve_nnls(&e, &y, &SolverConfig::default()).unwrap();
        (rep.x_sharp.clone(), rep.residual_frobenius)
    };
    // a starved projected-gradient run still returns something no worse than the candidate
    let cfg = SolverConfig {
        max_iterations: 1,
        ..SolverConfig::with_algorithm(Algorithm::ProjectedGradient)
    };
    let problem = NnlsProblem::new(&e);
    let rep = problem.solve_from(&y, &cfg, Some(&x_opt)).unwrap();
    let cand = e.forward(&x_opt).unwrap().sub(&y).unwrap().frobenius_norm();
    assert!(rep.residual_frobenius <= cand + 1e-12);
}

#[test]
fn non_hermitian_datum_is_hermitized() {
    let (e, y) = noisy_instance(4, 4, 10);
    let mut skewed = y.clone();
    // anti-Hermitian perturbation: the Hermitian part is unchanged
    skewed[(0, 1)] += Complex64::new(0.0, 0.5);
    skewed[(1, 0)] += Complex64::new(0.0, 0.5);
    let a = solve_nnls(&e, &y, &SolverConfig::default()).unwrap();
    let b = solve_nnls(&e, &skewed, &SolverConfig::default()).unwrap();
    assert!(!a.hermitized);
    assert!(b.hermitized);
    for (u, v) in a.x_sharp.iter().zip(&b.x_sharp) {
        assert!((u - v).abs() < 1e-8);
    }
}

#[test]
fn invalid_inputs() {
    let e = sample_ensemble(3, 5, SubgaussianLaw::gaussian(), 0).unwrap();
    let mut y = ComplexMatrix::zeros(3, 3);
    y[(0, 0)] = Complex64::new(f64::NAN, 0.0);
    assert!(matches!(
        solve_nnls(&e, &y, &SolverConfig::default()),
        Err(Error::Input(_))
    ));
    assert!(matches!(
        solve_nnls(&e, &ComplexMatrix::zeros(2, 2), &SolverConfig::default()),
        Err(Error::Dimension(_))
    ));
    let bad = SolverConfig {
        kkt_tolerance: 0.0,
        ..Default::default()
    };
    assert!(solve_nnls(&e, &ComplexMatrix::zeros(3, 3), &bad).is_err());
}

#[test]
fn iteration_cap_reports_non_convergence() {
    let (e, y) = noisy_instance(9, 6, 30);
    let cfg = SolverConfig {
        max_iterations: 1,
        ..SolverConfig::default()
    };
    let rep = solve_nnls(&e, &y, &cfg).unwrap();
    assert!(!rep.converged);
}

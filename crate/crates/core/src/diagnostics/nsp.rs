use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificates::{NormTag, NspCertificate};
use crate::ensemble::MeasurementEnsemble;
use crate::error::{Error, Result};
use crate::numerics::{lp_norm, RealMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NspCheckReport {
    pub certificate: NspCertificate,
    pub trials: usize,
    pub seed: u64,
    /// Number of `(v, S)` pairs checked.
    pub pairs_checked: usize,
    pub violations: usize,
    /// Largest `lhs / rhs` seen; a value above 1 is a violation.
    pub worst_ratio: f64,
}

#[derive(Clone, Copy, Debug)]
enum Probe {
    Gaussian,
    SparsePlusDense,
    NearNull,
}

/// Sampled test of the nullspace inequality
/// `||v_S||_q <= rho / s^(1-1/q) ||v_{S^c}||_1 + tau ||A v||`.
///
/// Trial `i` draws one vector from a rotation of three families (Gaussian,
/// `s` large entries over a small dense floor, and the minimizer of the
/// measurement norm over a random coordinate subspace), then tests it on the
/// worst support (its `s` largest magnitudes) and on one uniformly random
/// support. The measurement norm is `||A(v)||_F` or `||Phi v||_2` according to
/// the certificate's tag.
pub fn nsp_sampled_check(
    e: &MeasurementEnsemble,
    cert: &NspCertificate,
    trials: usize,
    seed: u64,
) -> Result<NspCheckReport> {
    cert.validate()?;
    if trials < 1 {
        return Err(Error::Parameter(
            "NSP check needs at least one trial".into(),
        ));
    }
    let count = e.len();
    if cert.s > count {
        return Err(Error::Parameter(format!(
            "certificate order s = {} exceeds N = {count}",
            cert.s
        )));
    }
    let measure = measurement_matrix(e, cert.norm_tag);
    let gram = measure.tr_mul(&measure);
    let sub_size = count.min(measure.nrows() + cert.s);

    let (violations, worst) = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let probe = [Probe::Gaussian, Probe::SparsePlusDense, Probe::NearNull][i % 3];
            let v = draw_probe(probe, &gram, count, cert.s, sub_size, &mut rng);
            let meas = (&measure * DVector::from_column_slice(&v)).norm();
            let mut order: Vec<usize> = (0..count).collect();
            order.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()));
            let worst_support = order[..cert.s].to_vec();
            let random_support = rand::seq::index::sample(&mut rng, count, cert.s).into_vec();
            [worst_support, random_support]
                .iter()
                .map(|sup| inequality_ratio(&v, sup, meas, cert))
                .fold((0usize, 0.0f64), |(bad, w), r| {
                    (bad + usize::from(r > 1.0 + 1e-12), w.max(r))
                })
        })
        .reduce(|| (0, 0.0), |a, b| (a.0 + b.0, a.1.max(b.1)));

    Ok(NspCheckReport {
        certificate: *cert,
        trials,
        seed,
        pairs_checked: 2 * trials,
        violations,
        worst_ratio: worst,
    })
}

fn draw_probe(
    probe: Probe,
    gram: &DMatrix<f64>,
    count: usize,
    s: usize,
    sub_size: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    match probe {
        Probe::Gaussian => (0..count).map(|_| rng.sample(StandardNormal)).collect(),
        Probe::SparsePlusDense => {
            let mut v: Vec<f64> = (0..count)
                .map(|_| 0.01 * rng.sample::<f64, _>(StandardNormal))
                .collect();
            for j in rand::seq::index::sample(rng, count, s) {
                v[j] += rng.sample::<f64, _>(StandardNormal);
            }
            v
        }
        Probe::NearNull => {
            let cols = rand::seq::index::sample(rng, count, sub_size).into_vec();
            let k = cols.len();
            let sub = DMatrix::from_fn(k, k, |r, c| gram[(cols[r], cols[c])]);
            let eig = SymmetricEigen::new(sub);
            let imin = eig.eigenvalues.imin();
            let mut v = vec![0.0; count];
            for (r, &c) in cols.iter().enumerate() {
                v[c] = eig.eigenvectors[(r, imin)];
            }
            v
        }
    }
}

/// `lhs / rhs` of the nullspace inequality on support `sup`.
fn inequality_ratio(v: &[f64], sup: &[usize], meas: f64, cert: &NspCertificate) -> f64 {
    let mut inside = Vec::with_capacity(sup.len());
    let mut mask = vec![false; v.len()];
    for &j in sup {
        mask[j] = true;
        inside.push(v[j]);
    }
    let lhs = lp_norm(&inside, cert.q).unwrap_or(f64::INFINITY);
    let outside: f64 = v
        .iter()
        .zip(&mask)
        .filter(|(_, &m)| !m)
        .map(|(x, _)| x.abs())
        .sum();
    let s = cert.s as f64;
    let rhs = cert.rho / s.powf(1.0 - 1.0 / cert.q) * outside + cert.tau * meas;
    if lhs <= 1e-300 {
        0.0
    } else if rhs <= 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    }
}

/// Measurement norm used for a tag: `||A(v)||_F` or `||Phi v||_2`.
pub fn measurement_matrix(e: &MeasurementEnsemble, tag: NormTag) -> RealMatrix {
    match tag {
        NormTag::Frobenius => e.design_matrix(),
        NormTag::L2Columns => e.build_phi(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::{phi_to_frobenius, rip_to_nsp};
    use crate::diagnostics::rip::rip_exhaustive;
    use crate::ensemble::{sample_ensemble, LawKind, SubgaussianLaw};
    use num_complex::Complex64;

    #[test]
    fn vacuous_certificate_never_fails() {
        // N < n^2: the map is injective, so a huge tau dominates every probe
        let e = sample_ensemble(4, 6, SubgaussianLaw::gaussian(), 1).unwrap();
        for tag in [NormTag::Frobenius, NormTag::L2Columns] {
            let cert = NspCertificate::new(2.0, 2, 1.0 - 1e-9, 1e12, tag).unwrap();
            assert_eq!(nsp_sampled_check(&e, &cert, 300, 2).unwrap().violations, 0);
        }
    }

    #[test]
    fn duplicated_vector_is_caught() {
        let a = vec![Complex64::new(1.0, 0.5), Complex64::new(-0.3, 0.2)];
        let b = vec![Complex64::new(0.1, -1.0), Complex64::new(0.7, 0.0)];
        let e = MeasurementEnsemble::from_vectors(vec![a.clone(), a, b]).unwrap();
        let cert = NspCertificate::new(2.0, 1, 0.9, 5.0, NormTag::Frobenius).unwrap();
        let r = nsp_sampled_check(&e, &cert, 30, 0).unwrap();
        assert!(r.violations > 0, "{r:?}");
        assert!(r.worst_ratio > 1.0);
    }

    #[test]
    fn certified_instance_has_no_violations() {
        let e =
            sample_ensemble(8, 10, SubgaussianLaw::new(LawKind::ComplexRademacher), 11).unwrap();
        let delta = rip_exhaustive(&e.build_phi(), 2).unwrap().delta;
        assert!(
            delta < crate::certificates::rip_delta_limit(),
            "delta_2 = {delta}"
        );
        let cert = rip_to_nsp(delta, 1).unwrap();
        let r = nsp_sampled_check(&e, &cert, 20_000, 5).unwrap();
        assert_eq!(r.violations, 0, "{r:?}");
        let frob = phi_to_frobenius(&cert, e.m()).unwrap();
        let r = nsp_sampled_check(&e, &frob, 20_000, 6).unwrap();
        assert_eq!(r.violations, 0, "{r:?}");
    }

    #[test]
    fn deterministic_report() {
        let e = sample_ensemble(3, 9, SubgaussianLaw::gaussian(), 3).unwrap();
        let cert = NspCertificate::new(2.0, 2, 0.5, 1.0, NormTag::Frobenius).unwrap();
        assert_eq!(
            nsp_sampled_check(&e, &cert, 64, 9).unwrap(),
            nsp_sampled_check(&e, &cert, 64, 9).unwrap()
        );
        assert!(nsp_sampled_check(&e, &cert, 0, 9).is_err());
    }
}

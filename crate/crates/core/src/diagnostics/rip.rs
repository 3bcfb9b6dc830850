use itertools::Itertools;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::RealMatrix;

/// Largest number of supports [`rip_exhaustive`] will enumerate.
pub const EXHAUSTIVE_GUARD: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RipMethod {
    /// Exact: every support of size `s` was checked.
    Exhaustive,
    /// Lower bound from randomly drawn supports.
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RipEstimate {
    pub s: usize,
    pub delta: f64,
    pub method: RipMethod,
    pub supports_checked: u64,
    pub rows: usize,
    pub cols: usize,
    /// Set for sampled estimates.
    pub seed: Option<u64>,
}

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

fn check_order(phi: &RealMatrix, s: usize) -> Result<()> {
    if s < 1 || s > phi.nrows().min(phi.ncols()) {
        return Err(Error::Parameter(format!(
            "RIP order s = {s} outside [1, min(rows, cols) = {}]",
            phi.nrows().min(phi.ncols())
        )));
    }
    Ok(())
}

/// Distortion `max(lambda_max - 1, 1 - lambda_min)` of the Gram block on `support`.
fn support_distortion(gram: &DMatrix<f64>, support: &[usize]) -> f64 {
    let k = support.len();
    let sub = DMatrix::from_fn(k, k, |r, c| gram[(support[r], support[c])]);
    let eig = SymmetricEigen::new(sub).eigenvalues;
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    (hi - 1.0).max(1.0 - lo).max(0.0)
}

/// Restricted isometry constant `delta_s` by enumerating all `C(N, s)` supports.
pub fn rip_exhaustive(phi: &RealMatrix, s: usize) -> Result<RipEstimate> {
    check_order(phi, s)?;
    let cols = phi.ncols();
    let count = binomial(cols, s);
    if count > EXHAUSTIVE_GUARD {
        return Err(Error::Guard(format!(
            "C({cols}, {s}) = {count} supports exceed the exhaustive limit {EXHAUSTIVE_GUARD}; use the sampled estimate"
        )));
    }
    let gram = phi.tr_mul(phi);
    let supports: Vec<Vec<usize>> = (0..cols).combinations(s).collect();
    let delta = supports
        .par_iter()
        .map(|sup| support_distortion(&gram, sup))
        .reduce(|| 0.0, f64::max);
    Ok(RipEstimate {
        s,
        delta,
        method: RipMethod::Exhaustive,
        supports_checked: count,
        rows: phi.nrows(),
        cols,
        seed: None,
    })
}

/// Lower bound on `delta_s` from `samples` uniformly drawn supports.
///
/// A lower bound can refute a nullspace certificate but never establish one.
pub fn rip_sampled(phi: &RealMatrix, s: usize, samples: usize, seed: u64) -> Result<RipEstimate> {
    check_order(phi, s)?;
    if samples == 0 {
        return Err(Error::Parameter(
            "sampled RIP estimate needs at least one support".into(),
        ));
    }
    let cols = phi.ncols();
    let gram = phi.tr_mul(phi);
    let delta = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let sup = rand::seq::index::sample(&mut rng, cols, s).into_vec();
            support_distortion(&gram, &sup)
        })
        .reduce(|| 0.0, f64::max);
    Ok(RipEstimate {
        s,
        delta,
        method: RipMethod::Sampled,
        supports_checked: samples as u64,
        rows: phi.nrows(),
        cols,
        seed: Some(seed),
    })
}

/// Exhaustive when within the guard, otherwise a labelled sampled lower bound.
pub fn rip_estimate(phi: &RealMatrix, s: usize, samples: usize, seed: u64) -> Result<RipEstimate> {
    check_order(phi, s)?;
    if binomial(phi.ncols(), s) <= EXHAUSTIVE_GUARD {
        rip_exhaustive(phi, s)
    } else {
        rip_sampled(phi, s, samples, seed)
    }
}

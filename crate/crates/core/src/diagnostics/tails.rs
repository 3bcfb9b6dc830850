use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificates::{fourth_order_tail_bound, norm_tail_bound, UniversalConstants};
use crate::ensemble::{sample_vector, LawKind, SubgaussianLaw};
use crate::error::{Error, Result};
use crate::numerics::off_diagonal_dim;

const MIN_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailStatistic {
    /// `||a||_2^2` around `n`.
    SquaredNorm,
    /// `||P(a a^*)||_2^2` around `m = 2n(n-1)`.
    FourthOrder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailCheckReport {
    pub statistic: TailStatistic,
    pub law: LawKind,
    pub psi2: f64,
    pub n: usize,
    pub seed: u64,
    pub samples: usize,
    /// Universal constant used in the analytic bound.
    pub constant: f64,
    /// Relative deviation levels (`eta` or `omega`).
    pub thresholds: Vec<f64>,
    pub empirical_exceedance: Vec<f64>,
    pub analytic_bound: Vec<f64>,
    /// Indices where the empirical rate exceeds the bound.
    pub crossings: Vec<usize>,
    /// Expected value of the statistic.
    pub expected_mean: f64,
    pub empirical_mean: f64,
    pub standard_error: f64,
}

impl TailCheckReport {
    pub fn dominated(&self) -> bool {
        self.crossings.is_empty()
    }

    /// `|empirical mean - expected| / standard error`.
    pub fn mean_z_score(&self) -> f64 {
        if self.standard_error == 0.0 {
            if self.empirical_mean == self.expected_mean {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.empirical_mean - self.expected_mean).abs() / self.standard_error
        }
    }
}

/// `f(v) = 2 sum_{(k,l) in I} v_k^2 v_l^2` over the index set
/// `I = {(k, l) in [2n]^2 : k != l, k != n + l, l != n + k}`.
///
/// For `v = (Re a, Im a)` this equals `||P(a a^*)||_2^2`; the factor 2 accounts
/// for the `sqrt(2)` scaling of the off-diagonal vectorization.
pub fn fourth_order_poly(v: &[f64]) -> Result<f64> {
    if !v.len().is_multiple_of(2) {
        return Err(Error::Dimension(format!(
            "fourth-order polynomial needs an even length, got {}",
            v.len()
        )));
    }
    let n = v.len() / 2;
    if n < 2 {
        return Err(Error::DegenerateDimension(format!("n = {n} < 2")));
    }
    // sum over I = (sum_k w_k)^2 - sum_k w_k^2 - 2 sum_{k<n} w_k w_{k+n}, w = v^2
    let w: Vec<f64> = v.iter().map(|x| x * x).collect();
    let total: f64 = w.iter().sum();
    let diag: f64 = w.iter().map(|x| x * x).sum();
    let partners: f64 = (0..n).map(|k| w[k] * w[k + n]).sum();
    Ok(2.0 * (total * total - diag - 2.0 * partners))
}

fn stacked(a: &[Complex64]) -> Vec<f64> {
    a.iter()
        .map(|z| z.re)
        .chain(a.iter().map(|z| z.im))
        .collect()
}

fn check_common(n: usize, samples: usize, levels: &[f64]) -> Result<()> {
    if n < 2 {
        return Err(Error::DegenerateDimension(format!("n = {n} < 2")));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::Parameter(format!(
            "tail check needs at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    if levels.is_empty() || levels.iter().any(|l| !(*l >= 0.0)) {
        return Err(Error::Parameter(
            "deviation levels must be a nonempty list of nonnegative numbers".into(),
        ));
    }
    Ok(())
}

fn summarize(
    values: &[f64],
    expected: f64,
    levels: &[f64],
    bounds: Vec<f64>,
) -> (Vec<f64>, Vec<usize>, f64, f64) {
    let count = values.len() as f64;
    let rates: Vec<f64> = levels
        .iter()
        .map(|&l| {
            values
                .iter()
                .filter(|&&x| (x - expected).abs() > l * expected)
                .count() as f64
                / count
        })
        .collect();
    let crossings = rates
        .iter()
        .zip(&bounds)
        .enumerate()
        .filter(|(_, (r, b))| r > b)
        .map(|(i, _)| i)
        .collect();
    let mean = values.iter().sum::<f64>() / count;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1.0);
    (rates, crossings, mean, (var / count).sqrt())
}

fn draw<F: Fn(&[Complex64]) -> f64 + Sync>(
    law: LawKind,
    n: usize,
    samples: usize,
    seed: u64,
    stat: F,
) -> Vec<f64> {
    (0..samples)
        .into_par_iter()
        .map(|i| stat(&sample_vector(law, n, seed, i as u64)))
        .collect()
}

/// Empirical rate of `| ||a||_2^2 - n | > eta n` against `2 exp(-c eta^2 n / (2 psi2^4))`.
pub fn norm_concentration_check(
    law: SubgaussianLaw,
    n: usize,
    etas: &[f64],
    samples: usize,
    seed: u64,
    constants: &UniversalConstants,
) -> Result<TailCheckReport> {
    check_common(n, samples, etas)?;
    let values = draw(law.kind, n, samples, seed, |a| {
        a.iter().map(|z| z.norm_sqr()).sum()
    });
    let bounds: Vec<f64> = etas
        .iter()
        .map(|&eta| norm_tail_bound(eta, law.psi2_bound, n, constants.hanson_wright_c).probability)
        .collect();
    let expected = n as f64;
    let (rates, crossings, mean, se) = summarize(&values, expected, etas, bounds.clone());
    Ok(TailCheckReport {
        statistic: TailStatistic::SquaredNorm,
        law: law.kind,
        psi2: law.psi2_bound,
        n,
        seed,
        samples,
        constant: constants.hanson_wright_c,
        thresholds: etas.to_vec(),
        empirical_exceedance: rates,
        analytic_bound: bounds,
        crossings,
        expected_mean: expected,
        empirical_mean: mean,
        standard_error: se,
    })
}

/// Empirical rate of `| ||P(a a^*)||_2^2 - m | > omega m` against
/// `2 exp(-gamma omega^2 n / psi2^4)`. Requires `n >= psi2^4`.
pub fn fourth_order_tail_check(
    law: SubgaussianLaw,
    n: usize,
    omegas: &[f64],
    samples: usize,
    seed: u64,
    constants: &UniversalConstants,
) -> Result<TailCheckReport> {
    check_common(n, samples, omegas)?;
    let psi4 = law.psi2_bound.powi(4);
    if (n as f64) < psi4 {
        return Err(Error::Precondition(format!("n = {n} < psi2^4 = {psi4:.4}")));
    }
    let values = draw(law.kind, n, samples, seed, |a| {
        fourth_order_poly(&stacked(a)).unwrap_or(f64::NAN)
    });
    let bounds: Vec<f64> = omegas
        .iter()
        .map(|&w| fourth_order_tail_bound(w, law.psi2_bound, n, constants.gamma).probability)
        .collect();
    let expected = off_diagonal_dim(n) as f64;
    let (rates, crossings, mean, se) = summarize(&values, expected, omegas, bounds.clone());
    Ok(TailCheckReport {
        statistic: TailStatistic::FourthOrder,
        law: law.kind,
        psi2: law.psi2_bound,
        n,
        seed,
        samples,
        constant: constants.gamma,
        thresholds: omegas.to_vec(),
        empirical_exceedance: rates,
        analytic_bound: bounds,
        crossings,
        expected_mean: expected,
        empirical_mean: mean,
        standard_error: se,
    })
}

/// Standard score of the confidence limit used by [`calibrate_constants`].
pub const CALIBRATION_Z: f64 = 3.0;

/// Wilson score upper limit for a binomial rate `r` observed over `k` draws.
pub fn wilson_upper(r: f64, k: usize, z: f64) -> f64 {
    let k = k as f64;
    let z2 = z * z;
    let centre = r + z2 / (2.0 * k);
    let spread = z * (r * (1.0 - r) / k + z2 / (4.0 * k * k)).sqrt();
    ((centre + spread) / (1.0 + z2 / k)).min(1.0)
}

/// Largest constants keeping each bound above a confidence limit of the observed rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub dimensions: Vec<usize>,
    pub levels: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    /// Largest admissible `c` for the squared-norm bound.
    pub max_hanson_wright_c: f64,
    /// Largest admissible `gamma` for the fourth-order bound.
    pub max_gamma: f64,
}

/// Calibrate `c` and `gamma` on the given law over a sweep of dimensions and levels.
///
/// For a bound `2 exp(-k x)` the constraint is `k <= ln(2/u) / x`, where `u`
/// is the Wilson upper confidence limit (`z = 3`) of the observed rate, so the
/// constants hold on fresh samples and not only on the calibration draw.
pub fn calibrate_constants(
    law: SubgaussianLaw,
    dimensions: &[usize],
    levels: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Calibration> {
    let psi4 = law.psi2_bound.powi(4);
    let loose = UniversalConstants::default();
    let mut max_c = f64::INFINITY;
    let mut max_gamma = f64::INFINITY;
    for &n in dimensions {
        let norm = norm_concentration_check(law, n, levels, samples, seed, &loose)?;
        let fourth =
            fourth_order_tail_check(law, n, levels, samples, seed.wrapping_add(1), &loose)?;
        for (i, &l) in levels.iter().enumerate() {
            if l <= 0.0 {
                continue;
            }
            let u = wilson_upper(norm.empirical_exceedance[i], samples, CALIBRATION_Z);
            max_c = max_c.min((2.0 / u).ln() / (l * l * n as f64 / (2.0 * psi4)));
            let u = wilson_upper(fourth.empirical_exceedance[i], samples, CALIBRATION_Z);
            max_gamma = max_gamma.min((2.0 / u).ln() / (l * l * n as f64 / psi4));
        }
    }
    Ok(Calibration {
        dimensions: dimensions.to_vec(),
        levels: levels.to_vec(),
        samples,
        seed,
        max_hanson_wright_c: max_c,
        max_gamma,
    })
}

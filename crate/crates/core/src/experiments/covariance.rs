use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{trial_seed, SIGNAL_STREAM};
use crate::ensemble::{sample_ensemble, SparseNonnegSignal, SubgaussianLaw};
use crate::error::{Error, Result};
use crate::numerics::{norm2, ComplexMatrix};
use crate::solver::{NnlsProblem, SolverConfig};

/// `N` devices with pilot sequences `a_i` in `C^n`, `s` of them active with
/// path gains `gamma_i`, observed by `M` antennas with iid Rayleigh fading.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceScenario {
    pub seed: u64,
    pub n: usize,
    #[serde(rename = "N")]
    pub count: usize,
    pub s: usize,
    #[serde(rename = "M")]
    pub antennas: usize,
    /// Variance of each complex entry of the additive noise.
    #[serde(default)]
    pub noise_power: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Entry `i` is declared active when `gamma#_i >= detection_ratio * max(gamma#)`.
    #[serde(default = "default_ratio")]
    pub detection_ratio: f64,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn default_trials() -> usize {
    20
}

fn default_ratio() -> f64 {
    0.1
}

impl CovarianceScenario {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("n = {} < 2", self.n)));
        }
        if self.count < 1 || self.s > self.count {
            return Err(Error::Config(format!(
                "need 1 <= N and s <= N, got N = {}, s = {}",
                self.count, self.s
            )));
        }
        if self.antennas < 1 {
            return Err(Error::Config("antenna count M must be at least 1".into()));
        }
        if !(self.noise_power >= 0.0) {
            return Err(Error::Config("noise_power must be nonnegative".into()));
        }
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.detection_ratio > 0.0 && self.detection_ratio <= 1.0) {
            return Err(Error::Config("detection_ratio must lie in (0, 1]".into()));
        }
        self.solver.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceTrial {
    pub trial: usize,
    pub seed: u64,
    pub antennas: usize,
    pub error_l2: f64,
    /// `error_l2 / ||gamma||_2`, or `error_l2` when `gamma = 0`.
    pub relative_error: f64,
    pub recall: f64,
    pub precision: f64,
    pub residual: f64,
    /// `||Y - A(gamma)||_F`.
    pub noise_frobenius: f64,
    pub max_estimate: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub scenario: CovarianceScenario,
    pub trials: Vec<CovarianceTrial>,
    pub median_relative_error: f64,
    pub mean_recall: f64,
    pub mean_precision: f64,
    pub dominance_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSweepRow {
    pub antennas: usize,
    pub median_relative_error: f64,
    pub mean_recall: f64,
    pub mean_precision: f64,
}

fn cn(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let k = s.len();
    if k % 2 == 1 {
        s[k / 2]
    } else {
        0.5 * (s[k / 2 - 1] + s[k / 2])
    }
}

fn covariance_trial(sc: &CovarianceScenario, trial: usize) -> Result<CovarianceTrial> {
    let seed = trial_seed(sc.seed, sc.n, sc.s, trial);
    let e = sample_ensemble(sc.n, sc.count, SubgaussianLaw::gaussian(), seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SIGNAL_STREAM);
    let gamma = SparseNonnegSignal::random(sc.count, sc.s, &mut rng)?;
    // fading depends on M so that paired runs share the instance but not the draws
    let mut fading = ChaCha8Rng::seed_from_u64(trial_seed(seed, sc.antennas, 0, 0));

    let n = sc.n;
    let amps: Vec<f64> = gamma.values().iter().map(|g| g.sqrt()).collect();
    let noise_amp = sc.noise_power.sqrt();
    let mut cov = ComplexMatrix::zeros(n, n);
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..sc.antennas {
        y.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (&i, &amp) in gamma.support().iter().zip(&amps) {
            let h = cn(&mut fading) * amp;
            for (dst, a) in y.iter_mut().zip(e.vector(i)) {
                *dst += h * a;
            }
        }
        if noise_amp > 0.0 {
            for dst in y.iter_mut() {
                *dst += cn(&mut fading) * noise_amp;
            }
        }
        for k in 0..n {
            for l in 0..n {
                cov[(k, l)] += y[k] * y[l].conj();
            }
        }
    }
    let cov = cov.scaled(1.0 / sc.antennas as f64);

    let truth = gamma.to_dense();
    let mut rep = NnlsProblem::new(&e).solve(&cov, &sc.solver)?;
    rep.attach_ground_truth(&truth)?;
    let error_l2 = rep.error_l2().unwrap_or(f64::INFINITY);
    let truth_norm = norm2(&truth);
    let max_estimate = rep.x_sharp.iter().fold(0.0f64, |a, &v| a.max(v));
    let detected: Vec<usize> = if max_estimate > 0.0 {
        (0..sc.count)
            .filter(|&i| rep.x_sharp[i] >= sc.detection_ratio * max_estimate)
            .collect()
    } else {
        Vec::new()
    };
    let hits = detected
        .iter()
        .filter(|i| gamma.support().binary_search(i).is_ok())
        .count();
    let recall = if sc.s == 0 {
        1.0
    } else {
        hits as f64 / sc.s as f64
    };
    let precision = if detected.is_empty() {
        1.0
    } else {
        hits as f64 / detected.len() as f64
    };
    Ok(CovarianceTrial {
        trial,
        seed,
        antennas: sc.antennas,
        error_l2,
        relative_error: if truth_norm > 0.0 {
            error_l2 / truth_norm
        } else {
            error_l2
        },
        recall,
        precision,
        residual: rep.residual_frobenius,
        noise_frobenius: cov.sub(&e.forward(&truth)?)?.frobenius_norm(),
        max_estimate,
        converged: rep.converged,
    })
}

/// Recover path gains from the empirical covariance `Y = (1/M) sum_k y_k y_k^*`.
pub fn run_covariance_matching(sc: &CovarianceScenario) -> Result<CovarianceReport> {
    sc.validate()?;
    let trials = (0..sc.trials)
        .into_par_iter()
        .map(|t| covariance_trial(sc, t))
        .collect::<Result<Vec<_>>>()?;
    let rel: Vec<f64> = trials.iter().map(|t| t.relative_error).collect();
    let count = trials.len() as f64;
    Ok(CovarianceReport {
        scenario: sc.clone(),
        median_relative_error: median(&rel),
        mean_recall: trials.iter().map(|t| t.recall).sum::<f64>() / count,
        mean_precision: trials.iter().map(|t| t.precision).sum::<f64>() / count,
        dominance_violations: trials
            .iter()
            .filter(|t| t.residual > t.noise_frobenius + 1e-9)
            .count(),
        trials,
    })
}

/// [`run_covariance_matching`] for each antenna count, same instances throughout.
pub fn run_covariance_sweep(
    sc: &CovarianceScenario,
    antennas: &[usize],
) -> Result<(Vec<CovarianceSweepRow>, Vec<CovarianceReport>)> {
    let reports = antennas
        .iter()
        .map(|&m| {
            run_covariance_matching(&CovarianceScenario {
                antennas: m,
                ..sc.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = reports
        .iter()
        .map(|r| CovarianceSweepRow {
            antennas: r.scenario.antennas,
            median_relative_error: r.median_relative_error,
            mean_recall: r.mean_recall,
            mean_precision: r.mean_precision,
        })
        .collect();
    Ok((rows, reports))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario() -> CovarianceScenario {
        CovarianceScenario {
            seed: 2,
            n: 8,
            count: 60,
            s: 3,
            antennas: 100,
            noise_power: 0.0,
            trials: 5,
            detection_ratio: 0.1,
            solver: SolverConfig::default(),
        }
    }

    #[test]
    fn zero_gains_zero_noise() {
        let r = run_covariance_matching(&CovarianceScenario { s: 0, ..scenario() }).unwrap();
        assert!(r.trials.iter().all(|t| t.max_estimate == 0.0));
    }

    #[test]
    fn zero_gains_with_noise_stay_small() {
        let r = run_covariance_matching(&CovarianceScenario {
            s: 0,
            noise_power: 0.5,
            ..scenario()
        })
        .unwrap();
        assert!(r.trials.iter().all(|t| t.max_estimate <= 0.5), "{r:?}");
    }

    #[test]
    fn more_antennas_help() {
        let (rows, reports) = run_covariance_sweep(&scenario(), &[1, 1000]).unwrap();
        assert!(rows[1].median_relative_error < rows[0].median_relative_error);
        assert!(reports.iter().all(|r| r.dominance_violations == 0));
    }

    #[test]
    fn rejects_zero_antennas() {
        assert!(matches!(
            run_covariance_matching(&CovarianceScenario {
                antennas: 0,
                ..scenario()
            }),
            Err(Error::Config(_))
        ));
    }
}

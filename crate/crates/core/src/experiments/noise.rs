use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{trial_seed, TrialRecord, NOISE_STREAM, SIGNAL_STREAM, SUCCESS_THRESHOLD};
use crate::certificates::{sparsity_threshold, theorem2_bound, QUOTED_C2, QUOTED_C3, QUOTED_C4};
use crate::ensemble::{sample_ensemble, LawKind, SparseNonnegSignal, SubgaussianLaw};
use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;
use crate::solver::{NnlsProblem, SolverConfig};

/// Absolute slack for rounding when comparing errors with the bound (which is 0 at zero noise).
pub const BOUND_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub seed: u64,
    pub n: usize,
    #[serde(rename = "N")]
    pub count: usize,
    pub s: usize,
    pub scales: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_law")]
    pub law: LawKind,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn default_trials() -> usize {
    5
}

fn default_law() -> LawKind {
    LawKind::ComplexGaussian
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("n = {} < 2", self.n)));
        }
        if self.s < 1 || self.s > self.count {
            return Err(Error::Config(format!(
                "s = {} outside [1, N = {}]",
                self.s, self.count
            )));
        }
        if self.scales.is_empty() || self.scales.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Config(
                "scales must be a nonempty list of finite nonnegative numbers".into(),
            ));
        }
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        self.solver.validate()
    }
}

/// Least-squares line `y = slope x` through the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    /// `1 - SS_res / SS_tot` with `SS_tot` taken about the mean of `y`.
    pub r_squared: f64,
}

pub fn through_origin_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Input(
            "line fit needs two equally long series of at least two points".into(),
        ));
    }
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if sxx == 0.0 {
        return Err(Error::Input("all abscissae are zero".into()));
    }
    let slope = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sxx;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - mean).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(LineFit { slope, r_squared })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub scale: f64,
    pub noise_frobenius: f64,
    pub mean_error: f64,
    pub max_error: f64,
    /// Subgaussian recovery bound with the quoted constants, `p = 2`, `sigma_s = 0`.
    pub bound: f64,
    /// `max(residual - ||E||_F)` over trials; nonpositive unless the minimizer is wrong.
    pub max_residual_excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub config: NoiseConfig,
    pub rows: Vec<NoiseRow>,
    pub fit: LineFit,
    /// `2s` within the sparsity threshold at `alpha = 1`.
    pub within_threshold: bool,
    pub all_below_bound: bool,
    pub dominance_violations: usize,
    pub non_converged: usize,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

/// Hermitian matrix with complex Gaussian entries, normalized to `||E_0||_F = 1`.
pub(crate) fn unit_hermitian(n: usize, rng: &mut ChaCha8Rng) -> Result<ComplexMatrix> {
    let raw = ComplexMatrix::from_fn(n, n, |_, _| {
        Complex64::new(
            StandardNormal.sample(&mut *rng),
            StandardNormal.sample(&mut *rng),
        )
    });
    let h = raw.hermitian_part()?;
    let norm = h.frobenius_norm();
    Ok(h.scaled(1.0 / norm))
}

/// For each trial fix `(A, x, E_0)` and solve with `Y = A(x) + t E_0` for every scale `t`.
pub fn run_noise_linearity(cfg: &NoiseConfig) -> Result<NoiseReport> {
    cfg.validate()?;
    let per_trial = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(cfg.seed, cfg.n, cfg.s, t);
            let e = sample_ensemble(cfg.n, cfg.count, SubgaussianLaw::new(cfg.law), seed)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(SIGNAL_STREAM);
            let x = SparseNonnegSignal::random(cfg.count, cfg.s, &mut rng)?.to_dense();
            let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
            noise_rng.set_stream(NOISE_STREAM);
            let e0 = unit_hermitian(cfg.n, &mut noise_rng)?;
            let clean = e.forward(&x)?;
            let problem = NnlsProblem::new(&e);
            cfg.scales
                .iter()
                .map(|&scale| {
                    let noise = e0.scaled(scale);
                    let mut rep = problem.solve(&clean.add(&noise)?, &cfg.solver)?;
                    rep.attach_ground_truth(&x)?;
                    let error_l2 = rep.error_l2().unwrap_or(f64::INFINITY);
                    Ok(TrialRecord {
                        n: cfg.n,
                        s: cfg.s,
                        trial: t,
                        seed,
                        success: error_l2 <= SUCCESS_THRESHOLD,
                        error_l2,
                        residual: rep.residual_frobenius,
                        iterations: rep.iterations,
                        converged: rep.converged,
                        noise_frobenius: noise.frobenius_norm(),
                        scale,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();

    let constants = (QUOTED_C2, QUOTED_C3, QUOTED_C4);
    let mut rows = Vec::with_capacity(cfg.scales.len());
    for &scale in &cfg.scales {
        let cell: Vec<&TrialRecord> = records.iter().filter(|r| r.scale == scale).collect();
        let noise_frobenius =
            cell.iter().map(|r| r.noise_frobenius).sum::<f64>() / cell.len() as f64;
        let bound = theorem2_bound(constants, 0.0, noise_frobenius, cfg.n, cfg.s, 2.0)?.total;
        rows.push(NoiseRow {
            scale,
            noise_frobenius,
            mean_error: cell.iter().map(|r| r.error_l2).sum::<f64>() / cell.len() as f64,
            max_error: cell.iter().map(|r| r.error_l2).fold(0.0, f64::max),
            bound,
            max_residual_excess: cell
                .iter()
                .map(|r| r.residual - r.noise_frobenius)
                .fold(f64::NEG_INFINITY, f64::max),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.noise_frobenius).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_error).collect();
    let fit = through_origin_fit(&xs, &ys)?;
    let within_threshold = sparsity_threshold(cfg.n, cfg.count, 1.0)
        .map(|t| 2 * cfg.s <= t)
        .unwrap_or(false);
    let all_below_bound = records.iter().all(|r| {
        theorem2_bound(constants, 0.0, r.noise_frobenius, cfg.n, cfg.s, 2.0)
            .map(|b| r.error_l2 <= b.total + BOUND_FLOOR)
            .unwrap_or(false)
    });
    Ok(NoiseReport {
        config: cfg.clone(),
        rows,
        fit,
        within_threshold,
        all_below_bound,
        dominance_violations: records
            .iter()
            .filter(|r| r.residual > r.noise_frobenius + 1e-9)
            .count(),
        non_converged: records.iter().filter(|r| !r.converged).count(),
        records,
    })
}

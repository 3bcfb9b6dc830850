use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{trial_seed, Grid, NRule, TrialRecord, SIGNAL_STREAM, SUCCESS_THRESHOLD};
use crate::ensemble::{sample_ensemble, LawKind, SparseNonnegSignal, SubgaussianLaw};
use crate::error::{Error, Result};
use crate::solver::{NnlsProblem, SolverConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    pub seed: u64,
    pub n_values: Grid,
    pub s_values: Grid,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_threshold")]
    pub success_threshold: f64,
    #[serde(default)]
    pub n_rule: NRule,
    #[serde(default = "default_law")]
    pub law: LawKind,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn default_trials() -> usize {
    20
}

fn default_threshold() -> f64 {
    SUCCESS_THRESHOLD
}

fn default_law() -> LawKind {
    LawKind::ComplexGaussian
}

impl PhaseConfig {
    pub fn new(seed: u64, n_values: Vec<usize>, s_values: Vec<usize>) -> Self {
        PhaseConfig {
            seed,
            n_values: n_values.into(),
            s_values: s_values.into(),
            trials: default_trials(),
            success_threshold: default_threshold(),
            n_rule: NRule::default(),
            law: default_law(),
            solver: SolverConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(Vec<usize>, Vec<usize>)> {
        let ns = self.n_values.values()?;
        let ss = self.s_values.values()?;
        if ns.is_empty() || ss.is_empty() {
            return Err(Error::Config(
                "n_values and s_values must be nonempty".into(),
            ));
        }
        if let Some(n) = ns.iter().find(|&&n| n < 2) {
            return Err(Error::Config(format!("n_values contains {n} < 2")));
        }
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.success_threshold > 0.0) {
            return Err(Error::Config("success_threshold must be positive".into()));
        }
        self.solver.validate()?;
        Ok((ns, ss))
    }
}

/// `n^2/4 - n - 25`, the curve the empirical transition is compared with.
pub fn boundary_curve(n: usize) -> f64 {
    let n = n as f64;
    n * n / 4.0 - n - 25.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub n_values: Vec<usize>,
    pub s_values: Vec<usize>,
    pub n_rule: String,
    /// `N` used for each entry of `n_values`.
    pub counts: Vec<usize>,
    pub law: LawKind,
    pub trials_per_cell: usize,
    pub success_threshold: f64,
    pub seed: u64,
    /// `grid[i][j]`: successes at `(n_values[i], s_values[j])`.
    pub grid: Vec<Vec<usize>>,
    /// Cells with `s > N`, not run.
    pub skipped: Vec<(usize, usize)>,
    pub non_converged: usize,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

impl PhaseDiagram {
    pub fn success_rate(&self, n: usize, s: usize) -> Option<f64> {
        let i = self.n_values.iter().position(|&v| v == n)?;
        let j = self.s_values.iter().position(|&v| v == s)?;
        if self.skipped.contains(&(n, s)) {
            return None;
        }
        Some(self.grid[i][j] as f64 / self.trials_per_cell as f64)
    }

    /// First `s` where the success rate falls through 1/2, linearly interpolated
    /// between grid points. `None` if the rate never starts at or above 1/2 or
    /// never drops below it on the grid.
    pub fn crossing(&self, n: usize) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .s_values
            .iter()
            .filter_map(|&s| self.success_rate(n, s).map(|r| (s as f64, r)))
            .collect();
        if pts.first()?.1 < 0.5 {
            return None;
        }
        pts.windows(2)
            .find(|w| w[0].1 >= 0.5 && w[1].1 < 0.5)
            .map(|w| {
                let ((s0, r0), (s1, r1)) = (w[0], w[1]);
                s0 + (r0 - 0.5) / (r0 - r1) * (s1 - s0)
            })
    }
}

/// Solve one noiseless trial at `(n, s)` with `count` measurement vectors.
pub(crate) fn phase_trial(
    cfg: &PhaseConfig,
    n: usize,
    count: usize,
    s: usize,
    trial: usize,
) -> Result<TrialRecord> {
    let seed = trial_seed(cfg.seed, n, s, trial);
    let e = sample_ensemble(n, count, SubgaussianLaw::new(cfg.law), seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SIGNAL_STREAM);
    let x = SparseNonnegSignal::random(count, s, &mut rng)?.to_dense();
    let y = e.forward(&x)?;
    let mut rep = NnlsProblem::new(&e).solve(&y, &cfg.solver)?;
    rep.attach_ground_truth(&x)?;
    let error_l2 = rep.error_l2().unwrap_or(f64::INFINITY);
    Ok(TrialRecord {
        n,
        s,
        trial,
        seed,
        success: error_l2 <= cfg.success_threshold,
        error_l2,
        residual: rep.residual_frobenius,
        iterations: rep.iterations,
        converged: rep.converged,
        noise_frobenius: 0.0,
        scale: 0.0,
    })
}

/// Success counts over the `(n, s)` grid; trials run in parallel.
pub fn run_phase_transition(cfg: &PhaseConfig) -> Result<PhaseDiagram> {
    let (ns, ss) = cfg.validate()?;
    let counts: Vec<usize> = ns.iter().map(|&n| cfg.n_rule.count(n)).collect();
    let mut tasks = Vec::new();
    let mut skipped = Vec::new();
    for (i, &n) in ns.iter().enumerate() {
        for &s in &ss {
            if s > counts[i] {
                skipped.push((n, s));
                continue;
            }
            tasks.extend((0..cfg.trials).map(|t| (i, n, s, t)));
        }
    }
    let records = tasks
        .par_iter()
        .map(|&(i, n, s, t)| phase_trial(cfg, n, counts[i], s, t))
        .collect::<Result<Vec<_>>>()?;

    let mut grid = vec![vec![0usize; ss.len()]; ns.len()];
    for r in &records {
        let i = ns.iter().position(|&v| v == r.n).unwrap_or(0);
        let j = ss.iter().position(|&v| v == r.s).unwrap_or(0);
        grid[i][j] += usize::from(r.success);
    }
    Ok(PhaseDiagram {
        n_values: ns,
        s_values: ss,
        n_rule: cfg.n_rule.describe(),
        counts,
        law: cfg.law,
        trials_per_cell: cfg.trials,
        success_threshold: cfg.success_threshold,
        seed: cfg.seed,
        grid,
        skipped,
        non_converged: records.iter().filter(|r| !r.converged).count(),
        records,
    })
}

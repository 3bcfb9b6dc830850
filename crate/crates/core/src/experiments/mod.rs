//! Seeded Monte-Carlo experiments: the recovery phase transition, linearity
//! of the error in the noise level, and covariance matching for activity
//! detection.
//!
//! Every trial draws its randomness from a seed mixed out of
//! `(base seed, n, s, trial)`, so results do not depend on scheduling.

mod covariance;
mod noise;
mod phase;

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use covariance::{
    run_covariance_matching, run_covariance_sweep, CovarianceReport, CovarianceScenario,
    CovarianceSweepRow,
};
pub use noise::{
    run_noise_linearity, through_origin_fit, LineFit, NoiseConfig, NoiseReport, NoiseRow,
};
pub use phase::{boundary_curve, run_phase_transition, PhaseConfig, PhaseDiagram};

/// Success threshold on `||x# - x||_2`.
pub const SUCCESS_THRESHOLD: f64 = 1e-4;

/// Stream of the signal RNG; ensemble vectors use streams `0..N`.
pub(crate) const SIGNAL_STREAM: u64 = u64::MAX;
pub(crate) const NOISE_STREAM: u64 = u64::MAX - 1;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one trial.
pub fn trial_seed(base: u64, n: usize, s: usize, trial: usize) -> u64 {
    [n as u64, s as u64, trial as u64]
        .into_iter()
        .fold(splitmix(base), |acc, v| splitmix(acc ^ v))
}

/// How the number of measurement vectors `N` follows from `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NRule {
    /// `N = k m` with `m = 2n(n-1)`, rounded up; written `"<k>m"`.
    MultipleOfM(f64),
    /// Fixed `N`; written as an integer.
    Fixed(usize),
}

impl Default for NRule {
    fn default() -> Self {
        NRule::MultipleOfM(2.0)
    }
}

impl NRule {
    pub fn count(&self, n: usize) -> usize {
        match *self {
            NRule::MultipleOfM(k) => {
                (k * crate::numerics::off_diagonal_dim(n) as f64).ceil() as usize
            }
            NRule::Fixed(count) => count,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            NRule::MultipleOfM(k) => {
                if k == 2.0 {
                    "N = 2m = 4n(n-1)".to_string()
                } else {
                    format!("N = ceil({k} * 2n(n-1))")
                }
            }
            NRule::Fixed(count) => format!("N = {count} for every n"),
        }
    }
}

impl FromStr for NRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t == "4n(n-1)" {
            return Ok(NRule::MultipleOfM(2.0));
        }
        if let Some(k) = t.strip_suffix('m') {
            let k = if k.is_empty() {
                1.0
            } else {
                k.parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad N rule `{s}`")))?
            };
            if !(k > 0.0) {
                return Err(Error::Config(format!(
                    "N rule multiple must be positive, got `{s}`"
                )));
            }
            return Ok(NRule::MultipleOfM(k));
        }
        t.parse::<usize>().map(NRule::Fixed).map_err(|_| {
            Error::Config(format!(
                "bad N rule `{s}`: expected \"<k>m\", \"4n(n-1)\" or an integer"
            ))
        })
    }
}

impl TryFrom<String> for NRule {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<NRule> for String {
    fn from(r: NRule) -> String {
        match r {
            NRule::MultipleOfM(k) => format!("{k}m"),
            NRule::Fixed(c) => c.to_string(),
        }
    }
}

/// A list of integers, or an inclusive range `{ start, end, step }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<usize>),
    Range {
        start: usize,
        end: usize,
        #[serde(default = "one")]
        step: usize,
    },
}

fn one() -> usize {
    1
}

impl Grid {
    pub fn values(&self) -> Result<Vec<usize>> {
        match self {
            Grid::List(v) => Ok(v.clone()),
            Grid::Range { start, end, step } => {
                if *step == 0 {
                    return Err(Error::Config("grid step must be positive".into()));
                }
                Ok((*start..=*end).step_by(*step).collect())
            }
        }
    }
}

impl From<Vec<usize>> for Grid {
    fn from(v: Vec<usize>) -> Self {
        Grid::List(v)
    }
}

/// Outcome of one solve against ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub s: usize,
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    pub error_l2: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `||E||_F` of the perturbation actually added to the datum.
    pub noise_frobenius: f64,
    /// Noise scale, or the antenna count for covariance matching.
    pub scale: f64,
}

/// Shortest round-trip decimal; exponent form outside `[1e-6, 1e16)`.
pub fn fmt_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-6..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub const CSV_HEADER: &str =
    "n,s,trial,seed,success,error_l2,residual,iterations,converged,noise_frobenius,scale";

/// CSV with LF line endings and shortest round-trip float formatting.
pub fn write_trials_csv<W: Write>(records: &[TrialRecord], mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.s,
            r.trial,
            r.seed,
            u8::from(r.success),
            fmt_float(r.error_l2),
            fmt_float(r.residual),
            r.iterations,
            u8::from(r.converged),
            fmt_float(r.noise_frobenius),
            fmt_float(r.scale)
        )?;
    }
    Ok(())
}

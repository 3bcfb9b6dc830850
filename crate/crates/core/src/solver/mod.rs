//! Nonnegative least squares for rank-one measurements.
//!
//! Solves `x# = argmin_{z >= 0} ||A(z) - Y||_F` without any regularization
//! parameter. The complex problem is mapped to a real one through the
//! isometric Hermitian embedding: column `i` of the design matrix `D` is the
//! embedding of `a_i a_i^*` and the data vector is the embedding of the
//! Hermitian part of `Y`. The skew-Hermitian part of `Y` is orthogonal to
//! the range of the map and only adds a constant to the objective.

mod active_set;
mod projected_gradient;

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::ensemble::MeasurementEnsemble;
use crate::error::{Error, Result};
use crate::numerics::{self, hermitian_embed, ComplexMatrix, RealMatrix};

pub use active_set::nnls_active_set;
pub use projected_gradient::nnls_projected_gradient;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Lawson-Hanson active set.
    #[default]
    ActiveSet,
    /// Accelerated projected gradient with monotone restarts.
    ProjectedGradient,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "active-set" => Ok(Algorithm::ActiveSet),
            "projected-gradient" => Ok(Algorithm::ProjectedGradient),
            other => Err(Error::Parameter(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Bound on the normalized KKT residual, see [`kkt_residual`].
    pub kkt_tolerance: f64,
    pub max_iterations: usize,
    pub algorithm: Algorithm,
    /// Record the objective after every iteration (projected gradient only).
    pub record_objective: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            kkt_tolerance: 1e-9,
            max_iterations: 50_000,
            algorithm: Algorithm::ActiveSet,
            record_objective: false,
        }
    }
}

impl SolverConfig {
    pub fn with_algorithm(algorithm: Algorithm) -> Self {
        SolverConfig {
            algorithm,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kkt_tolerance > 0.0) {
            return Err(Error::Parameter(format!(
                "kkt_tolerance must be positive, got {}",
                self.kkt_tolerance
            )));
        }
        if self.max_iterations < 1 {
            return Err(Error::Parameter("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub x_sharp: Vec<f64>,
    /// `||A(x#) - Y||_F` against the datum as supplied.
    pub residual_frobenius: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub algorithm: Algorithm,
    /// Set when `Y` was not Hermitian and its Hermitian part was used.
    pub hermitized: bool,
    /// `||x# - x||_p` keyed by `"1"`, `"2"`, `"inf"` once ground truth is attached.
    pub error_norms: Option<BTreeMap<String, f64>>,
    /// Objective `||A(z_k) - Y_h||_F^2 / 2` per iteration, when recorded.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub objective_trace: Vec<f64>,
}

impl RecoveryReport {
    pub fn attach_ground_truth(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.x_sharp.len() {
            return Err(Error::Dimension(format!(
                "truth has {} entries, estimate {}",
                x.len(),
                self.x_sharp.len()
            )));
        }
        let diff: Vec<f64> = self.x_sharp.iter().zip(x).map(|(a, b)| a - b).collect();
        let mut map = BTreeMap::new();
        map.insert("1".to_string(), numerics::lp_norm(&diff, 1.0)?);
        map.insert("2".to_string(), numerics::lp_norm(&diff, 2.0)?);
        map.insert("inf".to_string(), numerics::lp_norm(&diff, f64::INFINITY)?);
        self.error_norms = Some(map);
        Ok(())
    }

    pub fn error_l2(&self) -> Option<f64> {
        self.error_norms.as_ref().and_then(|m| m.get("2").copied())
    }
}

/// Outcome of a real NNLS solve `min_{z >= 0} ||D z - b||_2`.
#[derive(Clone, Debug)]
pub struct RealNnlsOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// The algorithm's own stopping rule fired before the iteration cap.
    pub finished: bool,
    pub objective_trace: Vec<f64>,
}

/// Measurement map in real coordinates, reusable across data.
#[derive(Clone, Debug)]
pub struct NnlsProblem {
    design: RealMatrix,
    n: usize,
    max_column_norm: f64,
}

impl NnlsProblem {
    pub fn new(e: &MeasurementEnsemble) -> Self {
        Self::from_design(e.design_matrix(), e.n())
    }

    /// `design` must have `n*n` rows laid out as in [`numerics::hermitian_embed`].
    pub fn from_design(design: RealMatrix, n: usize) -> Self {
        let max_column_norm = design.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
        NnlsProblem {
            design,
            n,
            max_column_norm,
        }
    }

    pub fn design(&self) -> &RealMatrix {
        &self.design
    }

    /// Side length `n` of the Hermitian data.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.design.ncols()
    }

    fn check_datum(&self, y: &ComplexMatrix) -> Result<()> {
        if y.rows() != self.n || y.cols() != self.n {
            return Err(Error::Dimension(format!(
                "Y is {}x{}, expected {n}x{n}",
                y.rows(),
                y.cols(),
                n = self.n
            )));
        }
        if y.has_non_finite() {
            return Err(Error::Input("Y contains NaN or infinite entries".into()));
        }
        Ok(())
    }

    /// Solve from zero.
    pub fn solve(&self, y: &ComplexMatrix, cfg: &SolverConfig) -> Result<RecoveryReport> {
        self.solve_from(y, cfg, None)
    }

    /// Solve, optionally starting from (or competing against) a feasible
    /// candidate. The returned objective never exceeds the candidate's.
    pub fn solve_from(
        &self,
        y: &ComplexMatrix,
        cfg: &SolverConfig,
        candidate: Option<&[f64]>,
    ) -> Result<RecoveryReport> {
        cfg.validate()?;
        self.check_datum(y)?;
        if let Some(c) = candidate {
            if c.len() != self.dim() {
                return Err(Error::Dimension(format!(
                    "candidate has {} entries, expected {}",
                    c.len(),
                    self.dim()
                )));
            }
            if c.iter().any(|v| !(*v >= 0.0)) {
                return Err(Error::Contract(
                    "candidate must be entrywise nonnegative".into(),
                ));
            }
        }
        let hermitized = !y.is_hermitian(1e-12 * y.frobenius_norm().max(1.0));
        let b = hermitian_embed(y);
        let scale = KktScale::new(norm(&b), self.max_column_norm);

        let outcome = match cfg.algorithm {
            // finite method: run to the round-off floor, then test the KKT tolerance
            Algorithm::ActiveSet => nnls_active_set(&self.design, &b, cfg.max_iterations, 0.0),
            Algorithm::ProjectedGradient => {
                nnls_projected_gradient(&self.design, &b, candidate, cfg, |x, g| {
                    scale.residual(x, g)
                })
            }
        };

        let mut x = outcome.x;
        if let Some(c) = candidate {
            if self.objective(&b, c) < self.objective(&b, &x) {
                x = c.to_vec();
            }
        }
        let g = self.gradient(&b, &x);
        let kkt = scale.residual(&x, &g);
        let residual = self.forward_residual(y, &x);
        Ok(RecoveryReport {
            x_sharp: x,
            residual_frobenius: residual,
            kkt_residual: kkt,
            iterations: outcome.iterations,
            converged: outcome.finished && kkt <= cfg.kkt_tolerance,
            algorithm: cfg.algorithm,
            hermitized,
            error_norms: None,
            objective_trace: outcome.objective_trace,
        })
    }

    /// `||D z - b||_2^2 / 2`.
    pub fn objective(&self, b: &[f64], z: &[f64]) -> f64 {
        let r = &self.design * DVector::from_column_slice(z) - DVector::from_column_slice(b);
        0.5 * r.norm_squared()
    }

    /// Gradient of `||A(z) - Y||_F^2`, i.e. `2 A^*(A(z) - Y)`.
    fn gradient(&self, b: &[f64], z: &[f64]) -> Vec<f64> {
        let r = &self.design * DVector::from_column_slice(z) - DVector::from_column_slice(b);
        (self.design.tr_mul(&r) * 2.0).as_slice().to_vec()
    }

    /// `||A(z) - Y||_F` recomputed in complex arithmetic from the datum.
    fn forward_residual(&self, y: &ComplexMatrix, z: &[f64]) -> f64 {
        let az = crate::numerics::hermitian_unembed(
            (&self.design * DVector::from_column_slice(z)).as_slice(),
            self.n,
        )
        .expect("design rows are n*n");
        az.sub(y).expect("shapes checked").frobenius_norm()
    }

    /// Normalized KKT residual of a nonnegative point.
    pub fn kkt_residual(&self, y: &ComplexMatrix, z: &[f64]) -> Result<f64> {
        self.check_datum(y)?;
        if z.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "z has {} entries, expected {}",
                z.len(),
                self.dim()
            )));
        }
        if z.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Contract(
                "KKT residual needs an entrywise nonnegative point".into(),
            ));
        }
        let b = hermitian_embed(y);
        let scale = KktScale::new(norm(&b), self.max_column_norm);
        Ok(scale.residual(z, &self.gradient(&b, z)))
    }
}

/// Normalization of the KKT residual.
///
/// With `g = 2 A^*(A(z) - Y)`, `r_Y = ||Y_h||_F` and `c = max_i ||a_i||_2^2`
/// the residual is
/// `max( max_i (-g_i)_+ / (2 r_Y c), max_i |g_i z_i| / (2 r_Y^2) )`.
/// Both parts are invariant under `(Y, z) -> (tY, tz)`. A zero datum uses
/// unit scales.
#[derive(Clone, Copy, Debug)]
struct KktScale {
    datum: f64,
    column: f64,
}

impl KktScale {
    fn new(datum_norm: f64, max_column_norm: f64) -> Self {
        let datum = if datum_norm > 0.0 { datum_norm } else { 1.0 };
        let column = if max_column_norm > 0.0 {
            max_column_norm
        } else {
            1.0
        };
        KktScale { datum, column }
    }

    fn residual(&self, z: &[f64], g: &[f64]) -> f64 {
        let mut dual = 0.0f64;
        let mut comp = 0.0f64;
        for (&zi, &gi) in z.iter().zip(g) {
            dual = dual.max(-gi);
            comp = comp.max((gi * zi).abs());
        }
        (dual / (2.0 * self.datum * self.column)).max(comp / (2.0 * self.datum * self.datum))
    }
}

fn norm(v: &[f64]) -> f64 {
    numerics::norm2(v)
}

/// Solve `argmin_{z >= 0} ||A(z) - Y||_F` for the ensemble's map.
///
/// Non-convergence is reported through `converged = false`, never as an error.
pub fn solve_nnls(
    e: &MeasurementEnsemble,
    y: &ComplexMatrix,
    cfg: &SolverConfig,
) -> Result<RecoveryReport> {
    NnlsProblem::new(e).solve(y, cfg)
}

/// Normalized KKT residual of `z` for the problem `(e, Y)`; zero iff `z` is optimal.
pub fn kkt_residual(e: &MeasurementEnsemble, y: &ComplexMatrix, z: &[f64]) -> Result<f64> {
    NnlsProblem::new(e).kkt_residual(y, z)
}

#[cfg(test)]
mod tests;

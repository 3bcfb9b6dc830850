use std::collections::HashMap;

use nalgebra::DVector;

use super::RealNnlsOutcome;
use crate::numerics::RealMatrix;

/// Relative pivot below which an entering column counts as dependent.
const PIVOT_TOLERANCE: f64 = 1e-12;

/// Lawson-Hanson active set method for `min_{z >= 0} ||D z - b||_2`.
///
/// The passive-set normal equations are solved with a Cholesky factor that
/// is updated when a column enters and downdated by Givens rotations when one
/// leaves, followed by two steps of iterative refinement against the original
/// columns. Gram columns `D^T d_j` are computed once when `j` first enters.
/// Stops when every entry of `D^T (b - D z)` outside the passive set is at
/// most `max(dual_tolerance, floor)`, where the floor is the round-off level
/// `10 eps ||b|| max_j ||d_j||`. Columns whose entry is only noise fail to
/// enter (negligible pivot or nonpositive coefficient) and are skipped.
pub fn nnls_active_set(
    d: &RealMatrix,
    b: &[f64],
    max_iterations: usize,
    dual_tolerance: f64,
) -> RealNnlsOutcome {
    let cols = d.ncols();
    let bv = DVector::from_column_slice(b);
    let atb = d.tr_mul(&bv);
    let mut gram: HashMap<usize, DVector<f64>> = HashMap::new();

    // round-off floor on the dual test; the lsqnonneg factor max(rows, cols)
    // is left out because it stops near-full-rank problems far too early
    let col_norm_max = d.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let floor = 10.0 * f64::EPSILON * bv.norm() * col_norm_max;
    let tol = dual_tolerance.max(floor);

    let mut x = vec![0.0; cols];
    let mut passive: Vec<usize> = Vec::new();
    let mut in_passive = vec![false; cols];
    let mut rejected = vec![false; cols];
    let mut chol = UpdatedCholesky::default();
    let mut iterations = 0usize;
    let mut refreshed = false;

    loop {
        // w = D^T (b - D x)
        let mut w = atb.clone();
        for &j in &passive {
            w.axpy(-x[j], &gram[&j], 1.0);
        }

        let candidate = (0..cols)
            .filter(|&j| !in_passive[j] && !rejected[j])
            .max_by(|&a, &b| w[a].total_cmp(&w[b]));
        let j = match candidate {
            Some(j) if w[j] > tol => j,
            _ if !refreshed && (0..cols).any(|j| rejected[j] && w[j] > tol) => {
                // rejections near the floor can come from drift in the updated
                // factor: refactor from scratch and give them one more chance
                refreshed = true;
                chol = UpdatedCholesky::default();
                let mut kept = Vec::with_capacity(passive.len());
                for &p in &passive {
                    let coupling: Vec<f64> = kept.iter().map(|&q| gram[&p][q]).collect();
                    if chol.append(&coupling, gram[&p][p]) {
                        kept.push(p);
                    } else {
                        x[p] = 0.0;
                        in_passive[p] = false;
                    }
                }
                passive = kept;
                let z = solve_passive(d, &bv, &atb, &chol, &passive);
                if z.iter().all(|&v| v > 0.0) {
                    for (k, &p) in passive.iter().enumerate() {
                        x[p] = z[k];
                    }
                }
                rejected.iter_mut().for_each(|r| *r = false);
                continue;
            }
            _ => {
                return RealNnlsOutcome {
                    x,
                    iterations,
                    finished: true,
                    objective_trace: Vec::new(),
                };
            }
        };
        if iterations >= max_iterations {
            return RealNnlsOutcome {
                x,
                iterations,
                finished: false,
                objective_trace: Vec::new(),
            };
        }

        let gj = gram
            .entry(j)
            .or_insert_with(|| d.tr_mul(&d.column(j).into_owned()));
        let coupling: Vec<f64> = passive.iter().map(|&p| gj[p]).collect();
        if !chol.append(&coupling, gj[j]) {
            // numerically inside the span of the passive columns
            rejected[j] = true;
            continue;
        }
        passive.push(j);
        in_passive[j] = true;

        let mut first = true;
        loop {
            iterations += 1;
            let z = solve_passive(d, &bv, &atb, &chol, &passive);
            if first && z[z.len() - 1] <= 0.0 {
                // the entering column cannot increase; skip it this round
                passive.pop();
                in_passive[j] = false;
                rejected[j] = true;
                chol.remove(chol.len() - 1);
                break;
            }
            first = false;
            if z.iter().all(|&v| v > 0.0) {
                for (k, &p) in passive.iter().enumerate() {
                    x[p] = z[k];
                }
                rejected.iter_mut().for_each(|r| *r = false);
                refreshed = false;
                break;
            }
            // step towards z until the first passive coordinate hits zero
            let mut alpha = f64::INFINITY;
            for (k, &p) in passive.iter().enumerate() {
                if z[k] <= 0.0 {
                    alpha = alpha.min(x[p] / (x[p] - z[k]));
                }
            }
            for (k, &p) in passive.iter().enumerate() {
                x[p] += alpha * (z[k] - x[p]);
            }
            let xmax = passive.iter().map(|&p| x[p]).fold(0.0, f64::max);
            // remove from the back so factor positions stay valid
            for k in (0..passive.len()).rev() {
                let p = passive[k];
                if x[p] <= 0.0 || (z[k] <= 0.0 && x[p] <= 1e-14 * xmax) {
                    x[p] = 0.0;
                    in_passive[p] = false;
                    passive.remove(k);
                    chol.remove(k);
                }
            }
            if passive.is_empty() || iterations >= max_iterations {
                break;
            }
        }
    }
}

/// Unconstrained least squares restricted to the passive columns, from the
/// normal equations plus two refinement steps on the true residual.
fn solve_passive(
    d: &RealMatrix,
    b: &DVector<f64>,
    atb: &DVector<f64>,
    chol: &UpdatedCholesky,
    passive: &[usize],
) -> Vec<f64> {
    let rhs: Vec<f64> = passive.iter().map(|&p| atb[p]).collect();
    let mut z = chol.solve(&rhs);
    for _ in 0..2 {
        let mut r = b.clone();
        for (k, &p) in passive.iter().enumerate() {
            r.axpy(-z[k], &d.column(p), 1.0);
        }
        let corr: Vec<f64> = passive.iter().map(|&p| d.column(p).dot(&r)).collect();
        let dz = chol.solve(&corr);
        for (zi, di) in z.iter_mut().zip(dz) {
            *zi += di;
        }
    }
    z
}

/// Upper triangular `R` with `R^T R = G`, stored by columns (column `c` holds rows `0..=c`).
#[derive(Default)]
struct UpdatedCholesky {
    cols: Vec<Vec<f64>>,
}

impl UpdatedCholesky {
    fn len(&self) -> usize {
        self.cols.len()
    }

    /// Add a column with Gram entries `coupling` (against current columns) and
    /// diagonal `diag`. Returns false, leaving the factor unchanged, when the
    /// new pivot is negligible.
    fn append(&mut self, coupling: &[f64], diag: f64) -> bool {
        let k = self.len();
        // solve R^T r = coupling
        let mut r = vec![0.0; k + 1];
        for i in 0..k {
            let mut acc = coupling[i];
            for (t, rt) in r.iter().enumerate().take(i) {
                acc -= self.cols[i][t] * rt;
            }
            r[i] = acc / self.cols[i][i];
        }
        let pivot2 = diag - r[..k].iter().map(|v| v * v).sum::<f64>();
        if !(pivot2 > PIVOT_TOLERANCE * diag) {
            return false;
        }
        r[k] = pivot2.sqrt();
        self.cols.push(r);
        true
    }

    /// Delete column `p` and restore triangular form with Givens rotations.
    fn remove(&mut self, p: usize) {
        self.cols.remove(p);
        let k = self.len();
        for j in p..k {
            let (a, bb) = (self.cols[j][j], self.cols[j][j + 1]);
            let h = a.hypot(bb);
            let (c, s) = if h == 0.0 {
                (1.0, 0.0)
            } else {
                (a / h, bb / h)
            };
            self.cols[j][j] = h;
            self.cols[j].truncate(j + 1);
            for col in self.cols.iter_mut().skip(j + 1) {
                let (u, v) = (col[j], col[j + 1]);
                col[j] = c * u + s * v;
                col[j + 1] = -s * u + c * v;
            }
        }
    }

    /// Solve `R^T R z = rhs`.
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let k = self.len();
        let mut u = vec![0.0; k];
        for i in 0..k {
            let col = &self.cols[i];
            let mut acc = rhs[i];
            for t in 0..i {
                acc -= col[t] * u[t];
            }
            u[i] = acc / col[i];
        }
        for i in (0..k).rev() {
            let mut acc = u[i];
            for (c, col) in self.cols.iter().enumerate().skip(i + 1) {
                acc -= col[i] * u[c];
            }
            u[i] = acc / self.cols[i][i];
        }
        u
    }
}

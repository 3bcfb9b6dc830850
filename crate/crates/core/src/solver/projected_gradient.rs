use nalgebra::DVector;

use super::{RealNnlsOutcome, SolverConfig};
use crate::numerics::RealMatrix;

const POWER_ITERATIONS: usize = 100;
const KKT_CHECK_EVERY: usize = 10;

/// Largest eigenvalue of `D^T D` by power iteration, padded by 2%.
pub(crate) fn lipschitz_estimate(d: &RealMatrix) -> f64 {
    let cols = d.ncols();
    if cols == 0 {
        return 1.0;
    }
    let mut v = DVector::from_element(cols, 1.0 / (cols as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let w = d.tr_mul(&(d * &v));
        let nrm = w.norm();
        if nrm == 0.0 {
            return 1.0;
        }
        let next = nrm;
        v = w / nrm;
        if (next - lambda).abs() <= 1e-10 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    1.02 * lambda
}

/// Accelerated projected gradient for `min_{z >= 0} ||D z - b||_2^2 / 2`.
///
/// Step `1/L` with `L` from power iteration (doubled whenever the quadratic
/// upper bound fails). Whenever an accelerated step would increase the
/// objective the momentum is dropped and a plain projected step is taken
/// from the current iterate instead, so the objective sequence is
/// nonincreasing. `kkt(x, g)` receives the gradient of `||D z - b||^2`
/// (twice the least-squares gradient) and is polled every few iterations.
pub fn nnls_projected_gradient(
    d: &RealMatrix,
    b: &[f64],
    start: Option<&[f64]>,
    cfg: &SolverConfig,
    kkt: impl Fn(&[f64], &[f64]) -> f64,
) -> RealNnlsOutcome {
    let cols = d.ncols();
    let b = DVector::from_column_slice(b);
    let mut lip = lipschitz_estimate(d);

    let mut x = match start {
        Some(s) => DVector::from_iterator(cols, s.iter().map(|v| v.max(0.0))),
        None => DVector::zeros(cols),
    };
    let mut dx = d * &x;
    let mut fx = 0.5 * (&dx - &b).norm_squared();
    let mut y = x.clone();
    let mut dy = dx.clone();
    let mut t = 1.0f64;
    let mut trace = Vec::new();
    if cfg.record_objective {
        trace.push(fx);
    }

    for it in 1..=cfg.max_iterations {
        let grad_y = d.tr_mul(&(&dy - &b));
        let (mut x_new, mut dx_new, mut f_new) = projected_step(d, &b, &y, &grad_y, lip);
        // the quadratic model at y must dominate; otherwise L was too small
        while f_new > quadratic_model(&y, &dy, &b, &grad_y, &x_new, lip) * (1.0 + 1e-12) + 1e-300 {
            lip *= 2.0;
            (x_new, dx_new, f_new) = projected_step(d, &b, &y, &grad_y, lip);
        }
        if f_new > fx {
            // restart from x without momentum
            t = 1.0;
            let grad_x = d.tr_mul(&(&dx - &b));
            (x_new, dx_new, f_new) = projected_step(d, &b, &x, &grad_x, lip);
            while f_new > fx {
                lip *= 2.0;
                (x_new, dx_new, f_new) = projected_step(d, &b, &x, &grad_x, lip);
                if lip > 1e300 {
                    break;
                }
            }
            if f_new > fx {
                x_new = x.clone();
                dx_new = dx.clone();
                f_new = fx;
            }
        }
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_new;
        y = &x_new + (&x_new - &x) * beta;
        dy = &dx_new + (&dx_new - &dx) * beta;
        x = x_new;
        dx = dx_new;
        fx = f_new;
        t = t_new;
        if cfg.record_objective {
            trace.push(fx);
        }

        if it % KKT_CHECK_EVERY == 0 {
            let g = d.tr_mul(&(&dx - &b)) * 2.0;
            if kkt(x.as_slice(), g.as_slice()) <= cfg.kkt_tolerance {
                return RealNnlsOutcome {
                    x: x.as_slice().to_vec(),
                    iterations: it,
                    finished: true,
                    objective_trace: trace,
                };
            }
        }
    }
    let g = d.tr_mul(&(&dx - &b)) * 2.0;
    let finished = kkt(x.as_slice(), g.as_slice()) <= cfg.kkt_tolerance;
    RealNnlsOutcome {
        x: x.as_slice().to_vec(),
        iterations: cfg.max_iterations,
        finished,
        objective_trace: trace,
    }
}

fn projected_step(
    d: &RealMatrix,
    b: &DVector<f64>,
    from: &DVector<f64>,
    grad: &DVector<f64>,
    lip: f64,
) -> (DVector<f64>, DVector<f64>, f64) {
    let x = (from - grad / lip).map(|v| v.max(0.0));
    let dx = d * &x;
    let f = 0.5 * (&dx - b).norm_squared();
    (x, dx, f)
}

fn quadratic_model(
    y: &DVector<f64>,
    dy: &DVector<f64>,
    b: &DVector<f64>,
    grad: &DVector<f64>,
    x: &DVector<f64>,
    lip: f64,
) -> f64 {
    let step = x - y;
    0.5 * (dy - b).norm_squared() + grad.dot(&step) + 0.5 * lip * step.norm_squared()
}

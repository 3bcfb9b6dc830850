use crate::error::{Error, Result};

pub const MIN_PSI_SAMPLES: usize = 1000;

/// Moment estimate of the Orlicz `psi_r` norm,
/// `max_{p = 1..=p_max} p^(-1/r) (mean |x|^p)^(1/p)`.
///
/// A lower estimate of `sup_{p >= 1} p^(-1/r) (E|X|^p)^(1/p)`: the grid of `p`
/// is finite and the moments are empirical. Nondecreasing in `r`.
pub fn psi_r_estimate(samples: &[f64], r: f64, p_max: usize) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Input("no samples".into()));
    }
    if samples.len() < MIN_PSI_SAMPLES {
        return Err(Error::Parameter(format!(
            "psi_r estimate needs at least {MIN_PSI_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if !(r >= 1.0) {
        return Err(Error::Parameter(format!("r = {r} < 1")));
    }
    if p_max < 2 {
        return Err(Error::Parameter(format!("p_max = {p_max} < 2")));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("non-finite sample".into()));
    }
    let scale = samples.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    let count = samples.len() as f64;
    let best = (1..=p_max)
        .map(|p| {
            let pf = p as f64;
            let moment = samples
                .iter()
                .map(|x| (x.abs() / scale).powi(p as i32))
                .sum::<f64>()
                / count;
            pf.powf(-1.0 / r) * moment.powf(1.0 / pf)
        })
        .fold(0.0f64, f64::max);
    Ok(scale * best)
}

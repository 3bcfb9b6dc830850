//! Closed-form constant chains of the recovery guarantees.
//!
//! Everything here is a pure formula evaluator. Universal constants whose
//! values are not known (`c` in the Hanson-Wright inequality, `gamma` in the
//! fourth-order tail bound, `C` and `c_hat` in the heavy-tailed RIP bound) are
//! explicit parameters; [`UniversalConstants`] holds the calibrated defaults.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ensemble::MeasurementEnsemble;
use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

/// Upper end (exclusive) of the RIP constants accepted by [`rip_to_nsp`], `4/sqrt(41)`.
pub fn rip_delta_limit() -> f64 {
    4.0 / 41f64.sqrt()
}

/// Rounded constants quoted for `eta = 1/3`, `delta = 1/6`.
pub const QUOTED_C2: f64 = 11.36;
pub const QUOTED_C3: f64 = 15.55;
pub const QUOTED_C4: f64 = 3.07;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UniversalConstants {
    /// `c` in the Hanson-Wright inequality and the norm concentration bound.
    pub hanson_wright_c: f64,
    /// `gamma` in the fourth-order tail bound.
    pub gamma: f64,
    /// `C` in the heavy-tailed RIP bound.
    pub rip_c: f64,
    /// `c_hat` in the heavy-tailed RIP bound.
    pub rip_c_hat: f64,
}

impl Default for UniversalConstants {
    fn default() -> Self {
        UniversalConstants {
            hanson_wright_c: 0.1,
            gamma: 0.01,
            rip_c: 1.0,
            rip_c_hat: 0.1,
        }
    }
}

/// Which norm the measurement term of a nullspace certificate uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormTag {
    /// `||A(v)||_F` of the rank-one map.
    Frobenius,
    /// `||Phi v||_2` of a real matrix.
    L2Columns,
}

/// Parameters `(q, s, rho, tau)` of an `l_q`-robust nullspace property:
/// `||v_S||_q <= rho / s^(1-1/q) ||v_{S^c}||_1 + tau ||A v||` for all `|S| <= s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NspCertificate {
    pub q: f64,
    pub s: usize,
    pub rho: f64,
    pub tau: f64,
    pub norm_tag: NormTag,
}

impl NspCertificate {
    pub fn new(q: f64, s: usize, rho: f64, tau: f64, norm_tag: NormTag) -> Result<Self> {
        let cert = NspCertificate {
            q,
            s,
            rho,
            tau,
            norm_tag,
        };
        cert.validate()?;
        Ok(cert)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q >= 1.0) {
            return Err(Error::Parameter(format!("q = {} < 1", self.q)));
        }
        if self.s < 1 {
            return Err(Error::Parameter(
                "certificate order s must be at least 1".into(),
            ));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Domain(format!("rho = {} outside (0, 1)", self.rho)));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Domain(format!("tau = {} not positive", self.tau)));
        }
        Ok(())
    }
}

/// `l_2` nullspace parameters implied by `delta_2s <= delta < 4/sqrt(41)`:
/// `rho = delta / (sqrt(1-delta^2) - delta/4)`, `tau = sqrt(1+delta) / (sqrt(1-delta^2) - delta/4)`.
pub fn rip_to_nsp(delta: f64, s: usize) -> Result<NspCertificate> {
    if !(delta > 0.0 && delta < rip_delta_limit()) {
        return Err(Error::Domain(format!(
            "delta = {delta} outside (0, 4/sqrt(41) = {:.6})",
            rip_delta_limit()
        )));
    }
    let denom = (1.0 - delta * delta).sqrt() - delta / 4.0;
    NspCertificate::new(
        2.0,
        s,
        delta / denom,
        (1.0 + delta).sqrt() / denom,
        NormTag::L2Columns,
    )
}

/// Transfer an `l_2` certificate of `Phi = P(A(.))/sqrt(m)` to the Frobenius
/// norm of `A` itself: same `rho`, `tau * sqrt(2/m)`.
pub fn phi_to_frobenius(cert: &NspCertificate, m: usize) -> Result<NspCertificate> {
    if cert.norm_tag != NormTag::L2Columns {
        return Err(Error::Parameter(
            "transfer expects a certificate of the RIP matrix".into(),
        ));
    }
    if m == 0 {
        return Err(Error::DegenerateDimension("m = 0".into()));
    }
    NspCertificate::new(
        cert.q,
        cert.s,
        cert.rho,
        cert.tau * (2.0 / m as f64).sqrt(),
        NormTag::Frobenius,
    )
}

/// `C(rho) = (1+rho)^2/(1-rho)` and `D(rho) = (3+rho)/(1-rho)`.
pub fn cd_constants(rho: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::Domain(format!("rho = {rho} outside [0, 1)")));
    }
    Ok(((1.0 + rho).powi(2) / (1.0 - rho), (3.0 + rho) / (1.0 - rho)))
}

/// `max(w) / min(w)` of a strictly positive vector.
pub fn condition_number(w: &[f64]) -> Result<f64> {
    if w.is_empty() {
        return Err(Error::Input("empty weight vector".into()));
    }
    let (lo, hi) = w.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if !(lo > 0.0) {
        return Err(Error::Infeasible(format!(
            "weights must be strictly positive, min = {lo}"
        )));
    }
    Ok(hi / lo)
}

/// Nullspace parameters of `A o W^{-1}` for `W = diag(w)`: `(kappa rho, max|w| tau)`.
pub fn weighted_nsp(cert: &NspCertificate, w: &[f64]) -> Result<NspCertificate> {
    let kappa = condition_number(w)?;
    let rho = kappa * cert.rho;
    if rho >= 1.0 {
        return Err(Error::Infeasible(format!(
            "kappa * rho = {kappa} * {} = {rho} >= 1",
            cert.rho
        )));
    }
    let w_max = w.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    NspCertificate::new(cert.q, cert.s, rho, w_max * cert.tau, cert.norm_tag)
}

/// Witness of the positivity criterion: `w = A^*(T) > 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MPlusCertificate {
    pub t: ComplexMatrix,
    pub w: Vec<f64>,
    pub kappa: f64,
    /// `||A^*(T)||_inf^{-1} ||T||_F` (the Frobenius norm is its own dual).
    pub theta: f64,
}

pub fn mplus_certificate(e: &MeasurementEnsemble, t: &ComplexMatrix) -> Result<MPlusCertificate> {
    let w = e.adjoint(t)?;
    if let Some((i, v)) = w.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::Infeasible(format!(
            "A^*(T) is not strictly positive: entry {i} = {v}"
        )));
    }
    let kappa = condition_number(&w)?;
    let w_inf = w.iter().fold(0.0f64, |a, &v| a.max(v));
    Ok(MPlusCertificate {
        t: t.clone(),
        w,
        kappa,
        theta: t.frobenius_norm() / w_inf,
    })
}

/// A bound split into its sparsity-defect and noise parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundBreakdown {
    pub p: f64,
    pub term_sparsity: f64,
    pub term_noise: f64,
    pub total: f64,
    pub constants: BTreeMap<String, f64>,
}

/// Deterministic recovery bound for the nonnegative least squares solution.
///
/// `C' kappa sigma_s / s^(1-1/p) + D' kappa / s^(1/q-1/p) (tau + theta / s^(1-1/q)) ||E||`
/// with `C' = 2(1+kappa rho)^2/(1-kappa rho)` and `D' = 2(3+kappa rho)/(1-kappa rho)`.
pub fn theorem1_bound(
    cert: &NspCertificate,
    mp: &MPlusCertificate,
    sigma_s: f64,
    noise_norm: f64,
    p: f64,
) -> Result<BoundBreakdown> {
    deterministic_bound(cert, mp.kappa, mp.theta, sigma_s, noise_norm, p)
}

/// [`theorem1_bound`] with `kappa` and `theta` given directly.
pub fn deterministic_bound(
    cert: &NspCertificate,
    kappa: f64,
    theta: f64,
    sigma_s: f64,
    noise_norm: f64,
    p: f64,
) -> Result<BoundBreakdown> {
    let kr = kappa * cert.rho;
    if kr >= 1.0 {
        return Err(Error::Domain(format!("kappa * rho = {kr} >= 1")));
    }
    if !(p >= 1.0 && p <= cert.q) {
        return Err(Error::Domain(format!(
            "p = {p} outside [1, q = {}]",
            cert.q
        )));
    }
    let s = cert.s as f64;
    let c_prime = 2.0 * (1.0 + kr).powi(2) / (1.0 - kr);
    let d_prime = 2.0 * (3.0 + kr) / (1.0 - kr);
    let term_sparsity = c_prime * kappa * sigma_s / s.powf(1.0 - 1.0 / p);
    let term_noise = d_prime * kappa / s.powf(1.0 / cert.q - 1.0 / p)
        * (cert.tau + theta / s.powf(1.0 - 1.0 / cert.q))
        * noise_norm;
    let constants = BTreeMap::from([
        ("C'".to_string(), c_prime),
        ("D'".to_string(), d_prime),
        ("kappa".to_string(), kappa),
        ("rho".to_string(), cert.rho),
        ("tau".to_string(), cert.tau),
        ("theta".to_string(), theta),
    ]);
    Ok(BoundBreakdown {
        p,
        term_sparsity,
        term_noise,
        total: term_sparsity + term_noise,
        constants,
    })
}

/// Constants of the subgaussian recovery guarantee.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Constants {
    pub eta: f64,
    pub delta: f64,
    pub rho: f64,
    pub tau: f64,
    /// `(1+eta)/(1-eta)`
    pub kappa_eta: f64,
    /// `C(kappa_eta rho)`
    pub c_of_kappa_rho: f64,
    /// `D(kappa_eta rho)`
    pub d_of_kappa_rho: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

/// `c2 = 2 C(k rho) k`, `c3 = 2 D(k rho) k / (1+eta)`, `c4 = 2 tau (1+eta)` with `k = (1+eta)/(1-eta)`.
pub fn theorem2_constants(eta: f64, delta: f64) -> Result<Theorem2Constants> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Domain(format!("eta = {eta} outside (0, 1)")));
    }
    let cert = rip_to_nsp(delta, 1)?;
    let kappa_eta = (1.0 + eta) / (1.0 - eta);
    let kr = kappa_eta * cert.rho;
    if kr >= 1.0 {
        return Err(Error::Infeasible(format!(
            "kappa_eta * rho = {kappa_eta:.4} * {:.4} = {kr:.4} >= 1",
            cert.rho
        )));
    }
    let (c, d) = cd_constants(kr)?;
    Ok(Theorem2Constants {
        eta,
        delta,
        rho: cert.rho,
        tau: cert.tau,
        kappa_eta,
        c_of_kappa_rho: c,
        d_of_kappa_rho: d,
        c2: 2.0 * c * kappa_eta,
        c3: 2.0 * d * kappa_eta / (1.0 + eta),
        c4: 2.0 * cert.tau * (1.0 + eta),
    })
}

/// `c2 sigma_s / s^(1-1/p) + c3 (c4 + sqrt(n/s)) / s^(1/2-1/p) ||E||_F / n` for `p` in `[1, 2]`.
pub fn theorem2_bound(
    c: (f64, f64, f64),
    sigma_s: f64,
    noise_frobenius: f64,
    n: usize,
    s: usize,
    p: f64,
) -> Result<BoundBreakdown> {
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::Domain(format!("p = {p} outside [1, 2]")));
    }
    if s < 1 {
        return Err(Error::Parameter("s must be at least 1".into()));
    }
    if n < 2 {
        return Err(Error::DegenerateDimension(format!("n = {n} < 2")));
    }
    let (c2, c3, c4) = c;
    let (sf, nf) = (s as f64, n as f64);
    let term_sparsity = c2 * sigma_s / sf.powf(1.0 - 1.0 / p);
    let term_noise = c3 * (c4 + (nf / sf).sqrt()) / sf.powf(0.5 - 1.0 / p) * noise_frobenius / nf;
    let constants = BTreeMap::from([
        ("c2".to_string(), c2),
        ("c3".to_string(), c3),
        ("c4".to_string(), c4),
    ]);
    Ok(BoundBreakdown {
        p,
        term_sparsity,
        term_noise,
        total: term_sparsity + term_noise,
        constants,
    })
}

/// Largest admissible `2s`: `floor(alpha m / log^2(e N / (alpha m)))`, `m = 2n(n-1)`.
pub fn sparsity_threshold(n: usize, count: usize, alpha: f64) -> Result<usize> {
    if n < 2 {
        return Err(Error::DegenerateDimension(format!("n = {n} < 2")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha = {alpha} outside (0, 1]")));
    }
    let m = crate::numerics::off_diagonal_dim(n);
    if count < m {
        return Err(Error::Domain(format!("N = {count} < m = {m}")));
    }
    let am = alpha * m as f64;
    let log = (std::f64::consts::E * count as f64 / am).ln();
    Ok((am / (log * log)).floor() as usize)
}

/// A probability bound with its unclamped value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub raw: f64,
    pub probability: f64,
}

impl TailBound {
    fn from_raw(raw: f64) -> Self {
        TailBound {
            raw,
            probability: raw.clamp(0.0, 1.0),
        }
    }
}

/// Hanson-Wright tail bound for `|<a, Z a> - E<a, Z a>| > t`.
///
/// Real: `2 exp(-c min(t^2/(K^4 ||Z||_F^2), t/(K^2 ||Z||_op)))`.
/// Complex: `4 exp(-c min(t^2/(4 K^4 ||Z||_F^2), t/(sqrt(2) K^2 ||Z||_op)))`.
pub fn hanson_wright_bound(
    t: f64,
    k: f64,
    frob: f64,
    op: f64,
    c: f64,
    complex_case: bool,
) -> Result<TailBound> {
    if !(t >= 0.0) || !(k > 0.0) || !(frob > 0.0) || !(op > 0.0) || !(c > 0.0) {
        return Err(Error::Parameter(
            "Hanson-Wright parameters must be positive (t >= 0)".into(),
        ));
    }
    let k2 = k * k;
    let raw = if complex_case {
        4.0 * (-c
            * (t * t / (4.0 * k2 * k2 * frob * frob)).min(t / (std::f64::consts::SQRT_2 * k2 * op)))
        .exp()
    } else {
        2.0 * (-c * (t * t / (k2 * k2 * frob * frob)).min(t / (k2 * op))).exp()
    };
    Ok(TailBound::from_raw(raw))
}

/// Exponent factor of the fourth-order polynomial concentration bound: the
/// minimum of ten terms in `omega, L, mu, sigma^2` (two of them carry a factor
/// `n`). Terms whose denominator vanishes count as `+inf`.
pub fn fourth_order_zeta(omega: f64, l: f64, mu: f64, sigma2: f64, n: usize) -> Result<f64> {
    if !(l >= 1.0) {
        return Err(Error::Parameter(format!("L = {l} < 1")));
    }
    if !(omega > 0.0) {
        return Err(Error::Parameter(format!(
            "omega = {omega} must be positive"
        )));
    }
    if !(mu >= 0.0 && sigma2 >= 0.0) {
        return Err(Error::Parameter(
            "mu and sigma^2 must be nonnegative".into(),
        ));
    }
    if n < 2 {
        return Err(Error::DegenerateDimension(format!("n = {n} < 2")));
    }
    let nf = n as f64;
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { f64::INFINITY };
    let terms = [
        ratio(omega.powi(2), l.powi(2) * mu.powi(2) * sigma2.powi(2)),
        ratio(omega, l.powi(2) * (sigma2 + 2.0 * mu * mu)),
        ratio(omega.powi(2), l.powi(4) * (sigma2 + mu * mu).powi(2)),
        ratio(omega.powf(2.0 / 3.0), l.powi(2) * mu.powf(2.0 / 3.0)),
        ratio(omega, l.powi(3) * mu),
        ratio(omega.powi(2) * nf, l.powi(6) * mu.powi(2)),
        omega.sqrt() / l.powi(2),
        omega.powf(2.0 / 3.0) / l.powf(8.0 / 3.0),
        omega / l.powi(4),
        omega.powi(2) * nf / l.powi(8),
    ];
    Ok(terms.into_iter().fold(f64::INFINITY, f64::min))
}

/// Union bound on the event that some `||a_i||_2^2` leaves `[n(1-eta), n(1+eta)]`,
/// `2 N exp(-c eta^2 n / (2 psi2^4))`, with the implied bound `(1+eta)/(1-eta)` on kappa.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MPlusConcentration {
    pub failure: TailBound,
    pub kappa_bound: f64,
}

pub fn mplus_concentration_bound(
    eta: f64,
    psi2: f64,
    n: usize,
    count: usize,
    c: f64,
) -> Result<MPlusConcentration> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Domain(format!("eta = {eta} outside (0, 1)")));
    }
    if !(psi2 >= 1.0) {
        return Err(Error::Parameter(format!("psi2 = {psi2} < 1")));
    }
    let raw = 2.0 * count as f64 * (-c * eta * eta * n as f64 / (2.0 * psi2.powi(4))).exp();
    Ok(MPlusConcentration {
        failure: TailBound::from_raw(raw),
        kappa_bound: (1.0 + eta) / (1.0 - eta),
    })
}

/// Per-vector tail of the squared norm, `2 exp(-c eta^2 n / (2 psi2^4))`.
pub fn norm_tail_bound(eta: f64, psi2: f64, n: usize, c: f64) -> TailBound {
    TailBound::from_raw(2.0 * (-c * eta * eta * n as f64 / (2.0 * psi2.powi(4))).exp())
}

/// Tail of `||P(a a^*)||_2^2` around `m`: `2 exp(-gamma omega^2 n / psi2^4)`.
pub fn fourth_order_tail_bound(omega: f64, psi2: f64, n: usize, gamma: f64) -> TailBound {
    TailBound::from_raw(2.0 * (-gamma * omega * omega * n as f64 / psi2.powi(4)).exp())
}

/// Heavy-tailed RIP estimate for `Phi/sqrt(m)` with independent columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeavyTailRip {
    /// `C xi^2 sqrt(s/m) log(e N / (s sqrt(s/m))) + theta`, `xi = psi K + K'`.
    pub delta_bound: f64,
    /// `exp(-c_hat K sqrt(s) log(e N / (s sqrt(s/m))))`.
    pub explicit_term: f64,
    /// `P(max ||X_i||_2 >= K' sqrt(m))`, supplied by the caller.
    pub norm_term: f64,
    /// `P(max | ||X_i||^2/m - 1 | >= theta)`, supplied by the caller.
    pub concentration_term: f64,
    pub failure: TailBound,
}

/// Parameters of the heavy-tailed RIP bound; `k_prime = None` selects `sqrt(1+theta)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeavyTailParams {
    pub s: usize,
    pub m: usize,
    pub count: usize,
    pub psi: f64,
    pub theta: f64,
    pub k: f64,
    pub k_prime: Option<f64>,
}

pub fn heavy_tail_rip(
    p: &HeavyTailParams,
    norm_term: f64,
    concentration_term: f64,
    constants: &UniversalConstants,
) -> Result<HeavyTailRip> {
    if p.s < 1 || p.s > p.count.min(p.m) {
        return Err(Error::Domain(format!("s = {} outside [1, min(N, m)]", p.s)));
    }
    if !(p.theta > 0.0 && p.theta < 1.0) {
        return Err(Error::Domain(format!("theta = {} outside (0, 1)", p.theta)));
    }
    let k_prime = p.k_prime.unwrap_or((1.0 + p.theta).sqrt());
    if !(p.k >= 1.0 && k_prime >= 1.0) {
        return Err(Error::Parameter("K and K' must be at least 1".into()));
    }
    let (s, m) = (p.s as f64, p.m as f64);
    let ratio = (s / m).sqrt();
    let log = (std::f64::consts::E * p.count as f64 / (s * ratio)).ln();
    let xi = p.psi * p.k + k_prime;
    let delta_bound = constants.rip_c * xi * xi * ratio * log + p.theta;
    let explicit_term = (-constants.rip_c_hat * p.k * s.sqrt() * log).exp();
    Ok(HeavyTailRip {
        delta_bound,
        explicit_term,
        norm_term,
        concentration_term,
        failure: TailBound::from_raw(explicit_term + norm_term + concentration_term),
    })
}

/// `alpha = min(1, (delta / (6 C (psi1 + sqrt(1 + delta/2))^2))^2)`.
pub fn rip_alpha(delta: f64, psi1: f64, constants: &UniversalConstants) -> f64 {
    let inner = delta / (6.0 * constants.rip_c * (psi1 + (1.0 + delta / 2.0).sqrt()).powi(2));
    (inner * inner).min(1.0)
}

/// Failure probability `2 exp(-min(c_hat sqrt(alpha), C1/2) n)` with
/// `C1 = gamma delta^2 / (4 psi2^4)`.
pub fn rip_failure_probability(
    alpha: f64,
    delta: f64,
    psi2: f64,
    n: usize,
    constants: &UniversalConstants,
) -> TailBound {
    let c1 = constants.gamma * delta * delta / (4.0 * psi2.powi(4));
    let rate = (constants.rip_c_hat * alpha.sqrt()).min(0.5 * c1);
    TailBound::from_raw(2.0 * (-rate * n as f64).exp())
}

/// One entry of the exported constant chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedConstant {
    pub name: String,
    pub value: f64,
    /// Formula that produced the value.
    pub provenance: String,
}

/// Full chain `delta -> (rho, tau) -> C, D -> (c2, c3, c4)` plus the sparsity threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantChain {
    pub eta: f64,
    pub delta: f64,
    pub constants: Vec<NamedConstant>,
    pub quoted: BTreeMap<String, f64>,
    pub within_quoted: bool,
    pub notes: Vec<String>,
}

impl ConstantChain {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.constants
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.value)
    }
}

/// Sparsity-threshold inputs for the chain report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdInputs {
    pub n: usize,
    pub count: usize,
    pub alpha: f64,
}

pub fn constant_chain(
    eta: f64,
    delta: f64,
    threshold: Option<ThresholdInputs>,
) -> Result<ConstantChain> {
    let t2 = theorem2_constants(eta, delta)?;
    let (c_rho, d_rho) = cd_constants(t2.rho)?;
    let named = |name: &str, value: f64, provenance: &str| NamedConstant {
        name: name.to_string(),
        value,
        provenance: provenance.to_string(),
    };
    let mut constants = vec![
        named("delta", delta, "input: RIP constant of order 2s"),
        named("eta", eta, "input: norm concentration level"),
        named("rho", t2.rho, "rho = delta / (sqrt(1 - delta^2) - delta/4)"),
        named(
            "tau",
            t2.tau,
            "tau = sqrt(1 + delta) / (sqrt(1 - delta^2) - delta/4)",
        ),
        named("C(rho)", c_rho, "C(rho) = (1 + rho)^2 / (1 - rho)"),
        named("D(rho)", d_rho, "D(rho) = (3 + rho) / (1 - rho)"),
        named(
            "kappa_eta",
            t2.kappa_eta,
            "kappa_eta = (1 + eta) / (1 - eta)",
        ),
        named(
            "C(kappa_eta*rho)",
            t2.c_of_kappa_rho,
            "C evaluated at kappa_eta * rho",
        ),
        named(
            "D(kappa_eta*rho)",
            t2.d_of_kappa_rho,
            "D evaluated at kappa_eta * rho",
        ),
        named("c2", t2.c2, "c2 = 2 C(kappa_eta rho) kappa_eta"),
        named("c3", t2.c3, "c3 = 2 D(kappa_eta rho) kappa_eta / (1 + eta)"),
        named("c4", t2.c4, "c4 = 2 tau (1 + eta)"),
    ];
    if let Some(ti) = threshold {
        let m = crate::numerics::off_diagonal_dim(ti.n);
        constants.push(named("m", m as f64, "m = 2n(n - 1)"));
        constants.push(named(
            "max_2s",
            sparsity_threshold(ti.n, ti.count, ti.alpha)? as f64,
            "2s <= alpha m / log^2(e N / (alpha m))",
        ));
    }
    let quoted = BTreeMap::from([
        ("c2".to_string(), QUOTED_C2),
        ("c3".to_string(), QUOTED_C3),
        ("c4".to_string(), QUOTED_C4),
    ]);
    let within_quoted = t2.c2 <= QUOTED_C2 && t2.c3 <= QUOTED_C3 && t2.c4 <= QUOTED_C4;
    let mut notes = Vec::new();
    if (delta - 0.5).abs() < 1e-12 {
        notes.push(format!(
            "tau at delta = 0.5 evaluates to {:.4}; the rounded value 1.5 often quoted for this point does not match the formula",
            t2.tau
        ));
    }
    Ok(ConstantChain {
        eta,
        delta,
        constants,
        quoted,
        within_quoted,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{sample_ensemble, SubgaussianLaw};
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    #[test]
    fn rip_to_nsp_at_half() {
        let c = rip_to_nsp(0.5, 3).unwrap();
        // rho = 0.5 / (sqrt(0.75) - 0.125), tau = sqrt(1.5) / (sqrt(0.75) - 0.125)
        let den = 0.75f64.sqrt() - 0.125;
        assert_relative_eq!(c.rho, 0.5 / den, max_relative = 1e-15);
        assert_relative_eq!(c.tau, 1.5f64.sqrt() / den, max_relative = 1e-15);
        assert!((c.rho - 0.6748).abs() < 1e-4);
        let (cc, dd) = cd_constants(c.rho).unwrap();
        assert!((cc - 8.62).abs() < 5e-3 && (dd - 11.30).abs() < 5e-3);
        assert_eq!(c.q, 2.0);
    }

    #[test]
    fn rip_to_nsp_limits_and_domain() {
        let c = rip_to_nsp(1e-9, 1).unwrap();
        assert!(c.rho < 1e-8 && (c.tau - 1.0).abs() < 1e-8);
        let c = rip_to_nsp(1.0 / 6.0, 1).unwrap();
        assert!(c.rho <= 0.18 && c.tau <= 1.15);
        assert!(matches!(rip_to_nsp(0.9, 1), Err(Error::Domain(_))));
        assert!(matches!(
            rip_to_nsp(rip_delta_limit(), 1),
            Err(Error::Domain(_))
        ));
        assert!(rip_to_nsp(rip_delta_limit() - 1e-9, 1).unwrap().rho < 1.0);
    }

    #[test]
    fn rip_to_nsp_is_increasing() {
        let mut prev = (0.0, 0.0);
        for k in 1..600 {
            let c = rip_to_nsp(k as f64 * 1e-3, 1).unwrap();
            assert!(c.rho > prev.0 && c.tau > prev.1);
            prev = (c.rho, c.tau);
        }
    }

    #[test]
    fn cd_examples() {
        assert_eq!(cd_constants(0.0).unwrap(), (1.0, 3.0));
        let (c, d) = cd_constants(0.353).unwrap();
        assert_relative_eq!(c, 1.353f64.powi(2) / 0.647, max_relative = 1e-14);
        assert!((c - 2.829).abs() < 1e-3 && (d - 5.182).abs() < 1e-3);
        assert!(matches!(cd_constants(1.0), Err(Error::Domain(_))));
        for k in 0..1000 {
            let (c, d) = cd_constants(k as f64 / 1000.0).unwrap();
            assert!(c <= d);
        }
    }

    #[test]
    fn weighted_nsp_examples() {
        let cert = NspCertificate::new(2.0, 4, 0.18, 1.1, NormTag::Frobenius).unwrap();
        assert_eq!(weighted_nsp(&cert, &[1.0; 7]).unwrap(), cert);
        let w = weighted_nsp(&cert, &[1.0, 2.0, 1.5]).unwrap();
        assert_relative_eq!(w.rho, 0.36);
        assert_relative_eq!(w.tau, 2.2);
        assert!(matches!(
            weighted_nsp(&cert, &[1.0, 6.0]),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            weighted_nsp(&cert, &[1.0, 0.0]),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn mplus_examples() {
        let e = sample_ensemble(5, 20, SubgaussianLaw::gaussian(), 4).unwrap();
        let id = ComplexMatrix::identity(5);
        let mp = mplus_certificate(&e, &id).unwrap();
        let norms = e.squared_norms();
        let kappa = norms.iter().cloned().fold(0.0, f64::max)
            / norms.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_relative_eq!(mp.kappa, kappa, max_relative = 1e-12);
        let scaled = mplus_certificate(&e, &id.scaled(3.7)).unwrap();
        assert_relative_eq!(scaled.kappa, mp.kappa, max_relative = 1e-12);
        assert_relative_eq!(scaled.theta, mp.theta, max_relative = 1e-12);

        let hand = MeasurementEnsemble::from_vectors(vec![
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            vec![Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.0)],
        ])
        .unwrap();
        let mp = mplus_certificate(&hand, &ComplexMatrix::identity(2)).unwrap();
        assert_eq!(mp.w, vec![1.0, 4.0]);
        assert_eq!(mp.kappa, 4.0);
        assert_relative_eq!(mp.theta, 2f64.sqrt() / 4.0);

        let mut neg = ComplexMatrix::identity(2);
        neg[(1, 1)] = Complex64::new(-1.0, 0.0);
        assert!(matches!(
            mplus_certificate(&hand, &neg),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn theorem1_examples() {
        let cert = NspCertificate::new(2.0, 4, 0.17649, 1.14379, NormTag::Frobenius).unwrap();
        let b = deterministic_bound(&cert, 2.0, 0.3, 0.0, 0.0, 2.0).unwrap();
        assert_eq!(b.total, 0.0);

        let tiny = NspCertificate { rho: 0.0, ..cert };
        let b = deterministic_bound(&tiny, 1.0, 0.3, 1.0, 1.0, 2.0).unwrap();
        assert_eq!(b.constants["C'"], 2.0);
        assert_eq!(b.constants["D'"], 6.0);

        // spreadsheet-style re-evaluation at kappa = 2, p = q = 2, s = 4
        let (sigma, e, theta) = (0.8, 0.05, 0.37);
        let b = deterministic_bound(&cert, 2.0, theta, sigma, e, 2.0).unwrap();
        let kr = 2.0 * 0.17649;
        let cp = 2.0 * (1.0 + kr) * (1.0 + kr) / (1.0 - kr);
        let dp = 2.0 * (3.0 + kr) / (1.0 - kr);
        let sparsity = cp * 2.0 * sigma / 2.0; // s^(1/2) = 2
        let noise = dp * 2.0 * (1.14379 + theta / 2.0) * e; // s^0 = 1
        assert!((b.term_sparsity - sparsity).abs() < 1e-12);
        assert!((b.term_noise - noise).abs() < 1e-12);
        assert!((b.total - (b.term_sparsity + b.term_noise)).abs() < 1e-12);

        assert!(matches!(
            deterministic_bound(&cert, 6.0, theta, 1.0, 1.0, 2.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            deterministic_bound(&cert, 2.0, theta, 1.0, 1.0, 3.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn theorem1_is_jointly_homogeneous() {
        let cert = NspCertificate::new(2.0, 5, 0.2, 1.2, NormTag::Frobenius).unwrap();
        let a = deterministic_bound(&cert, 1.5, 0.4, 0.3, 0.7, 1.5).unwrap();
        let b = deterministic_bound(&cert, 1.5, 0.4, 0.3 * 4.0, 0.7 * 4.0, 1.5).unwrap();
        assert_relative_eq!(b.total, 4.0 * a.total, max_relative = 1e-12);
    }

    #[test]
    fn theorem2_constants_chain() {
        let c = theorem2_constants(1.0 / 3.0, 1.0 / 6.0).unwrap();
        assert_relative_eq!(c.kappa_eta, 2.0, max_relative = 1e-15);
        assert!((c.c2 - 11.317).abs() < 1e-3, "{}", c.c2);
        assert!((c.c3 - 15.547).abs() < 1e-3, "{}", c.c3);
        assert!((c.c4 - 3.050).abs() < 1e-3, "{}", c.c4);
        assert!(c.c2 <= QUOTED_C2 && c.c3 <= QUOTED_C3 && c.c4 <= QUOTED_C4);
        assert!(c.c2 >= 0.99 * QUOTED_C2 && c.c3 >= 0.99 * QUOTED_C3 && c.c4 >= 0.99 * QUOTED_C4);

        let lim = theorem2_constants(1e-9, 1e-9).unwrap();
        assert!(
            (lim.c2 - 2.0).abs() < 1e-6
                && (lim.c3 - 6.0).abs() < 1e-6
                && (lim.c4 - 2.0).abs() < 1e-6
        );

        assert!(matches!(
            theorem2_constants(0.9, 0.3),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn theorem2_bound_examples() {
        let c = (QUOTED_C2, QUOTED_C3, QUOTED_C4);
        assert_eq!(theorem2_bound(c, 0.0, 0.0, 25, 5, 1.5).unwrap().total, 0.0);
        let b = theorem2_bound(c, 0.0, 2.0, 9, 9, 2.0).unwrap();
        assert_relative_eq!(
            b.term_noise,
            QUOTED_C3 * (QUOTED_C4 + 1.0) * 2.0 / 9.0,
            max_relative = 1e-14
        );
        // n = s = 25, p = 1, ||E|| = 1, sigma = 0.5: re-evaluated by hand
        let b = theorem2_bound(c, 0.5, 1.0, 25, 25, 1.0).unwrap();
        let sparsity = 11.36 * 0.5;
        let noise = 15.55 * (3.07 + 1.0) / 25f64.powf(-0.5) / 25.0;
        assert!((b.term_sparsity - sparsity).abs() < 1e-12);
        assert!((b.term_noise - noise).abs() < 1e-12);
        assert!(matches!(
            theorem2_bound(c, 0.0, 0.0, 25, 5, 2.5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn sparsity_threshold_examples() {
        assert_eq!(sparsity_threshold(20, 760, 1.0).unwrap(), 760);
        // 380 / ln(2e)^2 = 132.55...
        assert_eq!(sparsity_threshold(20, 760, 0.5).unwrap(), 132);
        // 760 / ln(2e)^2 = 265.108...
        assert_eq!(sparsity_threshold(20, 1520, 1.0).unwrap(), 265);
        let mut prev = usize::MAX;
        for k in (1..=100).rev() {
            let t = sparsity_threshold(20, 1520, k as f64 / 100.0).unwrap();
            assert!(t <= prev);
            prev = t;
        }
        assert!(sparsity_threshold(20, 1520, 1e-6).unwrap() == 0);
        assert!(matches!(
            sparsity_threshold(20, 759, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn hanson_wright_examples() {
        let b = hanson_wright_bound(0.0, 1.0, 1.0, 1.0, 0.1, false).unwrap();
        assert_eq!((b.raw, b.probability), (2.0, 1.0));
        assert_eq!(
            hanson_wright_bound(0.0, 1.0, 1.0, 1.0, 0.1, true)
                .unwrap()
                .raw,
            4.0
        );
        // both arguments equal one: t = K^2 ||Z||_op and t^2 = K^4 ||Z||_F^2
        let (k, op) = (1.3, 0.8);
        let t = k * k * op;
        let b = hanson_wright_bound(t, k, op, op, 0.7, false).unwrap();
        assert_relative_eq!(b.raw, 2.0 * (-0.7f64).exp(), max_relative = 1e-14);
        // complex bound >= real bound / 2 at matched arguments
        for i in 1..50 {
            let t = i as f64 * 0.3;
            let r = hanson_wright_bound(t, 1.2, 2.0, 1.1, 0.1, false)
                .unwrap()
                .raw;
            let c = hanson_wright_bound(t, 1.2, 2.0, 1.1, 0.1, true)
                .unwrap()
                .raw;
            assert!(c >= r / 2.0);
        }
        assert!(hanson_wright_bound(1.0, 0.0, 1.0, 1.0, 0.1, false).is_err());
    }

    #[test]
    fn zeta_examples() {
        let psi2: f64 = 1.2;
        let n = 10;
        for omega in [0.1, 0.5, 1.0] {
            let z = fourth_order_zeta(omega, psi2, 0.0, 1.0, n).unwrap();
            assert_relative_eq!(z, omega * omega / psi2.powi(4), max_relative = 1e-14);
        }
        assert!(fourth_order_zeta(1e-12, 1.0, 0.0, 1.0, 4).unwrap() < 1e-11);

        // mu = sigma^2 = L = omega = 1, n = 100: term by term
        let terms = [1.0, 1.0 / 3.0, 0.25, 1.0, 1.0, 100.0, 1.0, 1.0, 1.0, 100.0];
        let oracle = terms.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(fourth_order_zeta(1.0, 1.0, 1.0, 1.0, 100).unwrap(), oracle);
        assert!(fourth_order_zeta(1.0, 0.5, 1.0, 1.0, 100).is_err());
    }

    #[test]
    fn zeta_monotonicity() {
        for &(mu, s2) in &[(0.0, 1.0), (0.3, 0.7), (1.0, 1.0)] {
            let mut prev = 0.0;
            for k in 1..200 {
                let z = fourth_order_zeta(k as f64 * 0.01, 1.3, mu, s2, 20).unwrap();
                assert!(z >= prev);
                prev = z;
            }
            let mut prev = f64::INFINITY;
            for k in 0..100 {
                let z = fourth_order_zeta(0.5, 1.0 + k as f64 * 0.05, mu, s2, 20).unwrap();
                assert!(z <= prev);
                prev = z;
            }
        }
    }

    #[test]
    fn mplus_concentration_examples() {
        let b = mplus_concentration_bound(0.3, 1.0, 100, 1000, 0.1).unwrap();
        assert_relative_eq!(
            b.failure.raw,
            2000.0 * (-0.45f64).exp(),
            max_relative = 1e-14
        );
        assert_eq!(b.failure.probability, 1.0);
        assert_relative_eq!(
            mplus_concentration_bound(1.0 / 3.0, 1.0, 10, 10, 0.1)
                .unwrap()
                .kappa_bound,
            2.0
        );
        let far = mplus_concentration_bound(0.999, 1.0, 100_000, 10, 0.1).unwrap();
        assert!(far.failure.probability < 1e-100);
    }

    #[test]
    fn tail_bounds_are_monotone() {
        let mut prev = f64::INFINITY;
        for n in (10..500).step_by(10) {
            let b = fourth_order_tail_bound(0.5, 1.1547, n, 0.01).raw;
            let c = norm_tail_bound(0.5, 1.1547, n, 0.1).raw;
            assert!(b < prev && c <= 2.0);
            prev = b;
        }
    }

    #[test]
    fn heavy_tail_rip_terms() {
        let params = HeavyTailParams {
            s: 4,
            m: 760,
            count: 1520,
            psi: 2.0,
            theta: 0.2,
            k: 1.0,
            k_prime: None,
        };
        let r = heavy_tail_rip(&params, 0.01, 0.02, &UniversalConstants::default()).unwrap();
        let ratio = (4.0f64 / 760.0).sqrt();
        let log = (std::f64::consts::E * 1520.0 / (4.0 * ratio)).ln();
        let xi = 2.0 + 1.2f64.sqrt();
        assert_relative_eq!(
            r.delta_bound,
            xi * xi * ratio * log + 0.2,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            r.explicit_term,
            (-0.1 * 2.0 * log).exp(),
            max_relative = 1e-14
        );
        assert_relative_eq!(r.failure.raw, r.explicit_term + 0.03, max_relative = 1e-14);
        assert!(heavy_tail_rip(
            &HeavyTailParams { s: 0, ..params },
            0.0,
            0.0,
            &UniversalConstants::default()
        )
        .is_err());

        let alpha = rip_alpha(0.5, 3.0, &UniversalConstants::default());
        assert!(alpha > 0.0 && alpha <= 1.0);
        let p1 = rip_failure_probability(alpha, 0.5, 1.2, 100, &UniversalConstants::default());
        let p2 = rip_failure_probability(alpha, 0.5, 1.2, 1000, &UniversalConstants::default());
        assert!(p2.raw < p1.raw);
    }

    #[test]
    fn frobenius_transfer() {
        let c = rip_to_nsp(0.3, 2).unwrap();
        let f = phi_to_frobenius(&c, 760).unwrap();
        assert_eq!(f.rho, c.rho);
        assert_relative_eq!(f.tau, c.tau * (2.0f64 / 760.0).sqrt());
        assert_eq!(f.norm_tag, NormTag::Frobenius);
        assert!(phi_to_frobenius(&f, 760).is_err());
    }

    #[test]
    fn constant_chain_report() {
        let chain = constant_chain(
            1.0 / 3.0,
            1.0 / 6.0,
            Some(ThresholdInputs {
                n: 20,
                count: 1520,
                alpha: 1.0,
            }),
        )
        .unwrap();
        assert!(chain.within_quoted);
        assert_eq!(chain.get("max_2s"), Some(265.0));
        assert!(chain.constants.iter().all(|c| !c.provenance.is_empty()));
        let half = constant_chain(1.0 / 3.0, 0.5, None);
        // kappa_eta * rho(0.5) = 2 * 0.675 > 1
        assert!(matches!(half, Err(Error::Infeasible(_))));
    }
}

//! Random rank-one measurement ensembles.
//!
//! An ensemble holds `N` vectors `a_i` in `C^n`. The measurement map sends a
//! real vector `x` to `sum_i x_i a_i a_i^*`. Vector `a_i` is a pure function of
//! `(seed, i, law)`: it is drawn from a ChaCha8 stream seeded with `seed` on
//! stream number `i`, so ensembles regenerate bit-for-bit and can be built in
//! parallel.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, off_diagonal_dim, ComplexMatrix, RealMatrix};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LawKind {
    /// `Re, Im ~ N(0, 1/2)` independently.
    ComplexGaussian,
    /// `(+-1 +- i)/sqrt(2)`, unit modulus.
    ComplexRademacher,
    /// `Re, Im ~ U[-sqrt(3/2), sqrt(3/2)]` independently.
    UniformSymmetric,
    /// `Re ~ N(0, 1)`, `Im = 0`. Not of the complex model (the imaginary part
    /// is degenerate); kept for the real-valued experiment variant.
    RealGaussian,
}

impl LawKind {
    pub const ALL: [LawKind; 4] = [
        LawKind::ComplexGaussian,
        LawKind::ComplexRademacher,
        LawKind::UniformSymmetric,
        LawKind::RealGaussian,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            LawKind::ComplexGaussian => "complex-gaussian",
            LawKind::ComplexRademacher => "complex-rademacher",
            LawKind::UniformSymmetric => "uniform-symmetric",
            LawKind::RealGaussian => "real-gaussian",
        }
    }

    /// Orlicz psi_2 norm of one real coordinate, `inf{t : E exp(X^2/t^2) <= 2}`.
    pub fn coordinate_psi2(self) -> f64 {
        match self {
            // N(0, s2): (1 - 2 s2/t^2)^(-1/2) = 2  =>  t^2 = 8 s2 / 3
            LawKind::ComplexGaussian => (4.0f64 / 3.0).sqrt(),
            LawKind::RealGaussian => (8.0f64 / 3.0).sqrt(),
            // |X| = 1/sqrt(2): exp(1/(2 t^2)) = 2
            LawKind::ComplexRademacher => (0.5 / std::f64::consts::LN_2).sqrt(),
            // root of (1/b) int_0^b exp(x^2/t^2) dx = 2, b = sqrt(3/2)
            LawKind::UniformSymmetric => 0.946_369_905_536_165_2,
        }
    }

    fn sample(self, rng: &mut ChaCha8Rng) -> Complex64 {
        match self {
            LawKind::ComplexGaussian => {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
            }
            LawKind::ComplexRademacher => {
                let bits: u32 = rng.random();
                let re = if bits & 1 == 0 {
                    FRAC_1_SQRT_2
                } else {
                    -FRAC_1_SQRT_2
                };
                let im = if bits & 2 == 0 {
                    FRAC_1_SQRT_2
                } else {
                    -FRAC_1_SQRT_2
                };
                Complex64::new(re, im)
            }
            LawKind::UniformSymmetric => {
                let b = 1.5f64.sqrt();
                Complex64::new(rng.random_range(-b..b), rng.random_range(-b..b))
            }
            LawKind::RealGaussian => Complex64::new(StandardNormal.sample(rng), 0.0),
        }
    }
}

impl fmt::Display for LawKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for LawKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LawKind::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown law `{s}`")))
    }
}

/// Coordinate law together with a uniform psi_2 bound (at least 1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubgaussianLaw {
    pub kind: LawKind,
    pub psi2_bound: f64,
}

impl SubgaussianLaw {
    pub fn new(kind: LawKind) -> Self {
        SubgaussianLaw {
            kind,
            psi2_bound: kind.coordinate_psi2().max(1.0),
        }
    }

    pub fn gaussian() -> Self {
        Self::new(LawKind::ComplexGaussian)
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Complex64 {
        self.kind.sample(rng)
    }
}

impl From<LawKind> for SubgaussianLaw {
    fn from(kind: LawKind) -> Self {
        SubgaussianLaw::new(kind)
    }
}

/// Draw one vector of the ensemble.
pub fn sample_vector(law: LawKind, n: usize, seed: u64, index: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (0..n).map(|_| law.sample(&mut rng)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementEnsemble {
    n: usize,
    count: usize,
    /// vector `i` occupies `vectors[i*n .. (i+1)*n]`
    vectors: Vec<Complex64>,
    seed: Option<u64>,
    law: Option<SubgaussianLaw>,
}

/// Sample `count` iid vectors of dimension `n`.
pub fn sample_ensemble(
    n: usize,
    count: usize,
    law: SubgaussianLaw,
    seed: u64,
) -> Result<MeasurementEnsemble> {
    if n < 2 {
        return Err(Error::DegenerateDimension(format!(
            "ensemble dimension n = {n} < 2"
        )));
    }
    if count < 1 {
        return Err(Error::Parameter(
            "ensemble needs at least one vector".into(),
        ));
    }
    let mut vectors = vec![Complex64::new(0.0, 0.0); n * count];
    vectors
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, chunk)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            for z in chunk.iter_mut() {
                *z = law.sample(&mut rng);
            }
        });
    Ok(MeasurementEnsemble {
        n,
        count,
        vectors,
        seed: Some(seed),
        law: Some(law),
    })
}

impl MeasurementEnsemble {
    /// Ensemble from explicit vectors (no seed, no law).
    pub fn from_vectors(vectors: Vec<Vec<Complex64>>) -> Result<Self> {
        let count = vectors.len();
        if count == 0 {
            return Err(Error::Parameter(
                "ensemble needs at least one vector".into(),
            ));
        }
        let n = vectors[0].len();
        if n < 2 {
            return Err(Error::DegenerateDimension(format!(
                "ensemble dimension n = {n} < 2"
            )));
        }
        if vectors.iter().any(|v| v.len() != n) {
            return Err(Error::Dimension(
                "ensemble vectors of unequal length".into(),
            ));
        }
        Ok(MeasurementEnsemble {
            n,
            count,
            vectors: vectors.concat(),
            seed: None,
            law: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of vectors `N`.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn law(&self) -> Option<SubgaussianLaw> {
        self.law
    }

    /// `m = 2n(n-1)`, the row count of the RIP matrix.
    pub fn m(&self) -> usize {
        off_diagonal_dim(self.n)
    }

    pub fn vector(&self, i: usize) -> &[Complex64] {
        &self.vectors[i * self.n..(i + 1) * self.n]
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[Complex64]> {
        self.vectors.chunks(self.n)
    }

    /// Squared norms `||a_i||_2^2`.
    pub fn squared_norms(&self) -> Vec<f64> {
        self.vectors()
            .map(|a| a.iter().map(|z| z.norm_sqr()).sum())
            .collect()
    }

    /// Keep only the vectors listed in `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Parameter("empty subset".into()));
        }
        let mut vectors = Vec::with_capacity(indices.len() * self.n);
        for &i in indices {
            if i >= self.count {
                return Err(Error::Dimension(format!(
                    "index {i} outside ensemble of size {}",
                    self.count
                )));
            }
            vectors.extend_from_slice(self.vector(i));
        }
        Ok(MeasurementEnsemble {
            n: self.n,
            count: indices.len(),
            vectors,
            seed: None,
            law: self.law,
        })
    }

    /// `A(x) = sum_i x_i a_i a_i^*`.
    pub fn forward(&self, x: &[f64]) -> Result<ComplexMatrix> {
        if x.len() != self.count {
            return Err(Error::Dimension(format!(
                "x has {} entries, ensemble has {}",
                x.len(),
                self.count
            )));
        }
        let n = self.n;
        let mut y = ComplexMatrix::zeros(n, n);
        for (a, &xi) in self.vectors().zip(x) {
            if xi == 0.0 {
                continue;
            }
            for k in 0..n {
                let ak = a[k] * xi;
                for l in k..n {
                    y[(k, l)] += ak * a[l].conj();
                }
            }
        }
        for k in 0..n {
            y[(k, k)].im = 0.0;
            for l in (k + 1)..n {
                y[(l, k)] = y[(k, l)].conj();
            }
        }
        Ok(y)
    }

    /// `A^*(T) = (a_i^* T a_i)_i` for Hermitian `T`.
    ///
    /// Non-Hermitian `T` is rejected: the quadratic forms would be complex.
    pub fn adjoint(&self, t: &ComplexMatrix) -> Result<Vec<f64>> {
        let n = self.n;
        if t.rows() != n || t.cols() != n {
            return Err(Error::Dimension(format!(
                "T is {}x{}, expected {n}x{n}",
                t.rows(),
                t.cols()
            )));
        }
        let tol = 1e-10 * t.frobenius_norm().max(1.0);
        if !t.is_hermitian(tol) {
            return Err(Error::Contract(format!(
                "adjoint needs a Hermitian matrix (defect {:.3e})",
                t.hermitian_defect()
            )));
        }
        Ok(self.vectors().map(|a| quadratic_form(t, a)).collect())
    }

    /// Real RIP matrix `Phi = P(A(.)) / sqrt(m)`, one column per vector.
    pub fn build_phi(&self) -> RealMatrix {
        let m = self.m();
        let inv = 1.0 / (m as f64).sqrt();
        let mut phi = RealMatrix::zeros(m, self.count);
        let mut buf = vec![0.0; m];
        for (i, a) in self.vectors().enumerate() {
            numerics::p_vectorize_into(&ComplexMatrix::outer(a), &mut buf);
            for (dst, src) in phi.column_mut(i).iter_mut().zip(&buf) {
                *dst = src * inv;
            }
        }
        phi
    }

    /// Real `n^2 x N` matrix whose column `i` is the isometric embedding of
    /// `a_i a_i^*` (see [`numerics::hermitian_embed`]). For Hermitian `Y`,
    /// `||A(x) - Y||_F = ||D x - embed(Y)||_2`.
    pub fn design_matrix(&self) -> RealMatrix {
        let n = self.n;
        let upper = n * (n - 1) / 2;
        let r2 = std::f64::consts::SQRT_2;
        let mut d = RealMatrix::zeros(n * n, self.count);
        for (i, a) in self.vectors().enumerate() {
            let mut col = d.column_mut(i);
            for k in 0..n {
                col[k] = a[k].norm_sqr();
            }
            let mut idx = 0;
            for k in 0..n {
                for l in (k + 1)..n {
                    let z = a[k] * a[l].conj();
                    col[n + idx] = r2 * z.re;
                    col[n + upper + idx] = r2 * z.im;
                    idx += 1;
                }
            }
        }
        d
    }

    /// Write the regeneration header. Only sampled ensembles can be saved.
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        let (seed, law) = match (self.seed, self.law) {
            (Some(s), Some(l)) => (s, l),
            _ => return Err(Error::Input("only seeded ensembles can be saved".into())),
        };
        writeln!(w, "{ENSEMBLE_MAGIC}")?;
        writeln!(w, "seed={seed}")?;
        writeln!(w, "n={}", self.n)?;
        writeln!(w, "N={}", self.count)?;
        writeln!(w, "law={}", law.kind)?;
        Ok(())
    }

    /// Read a header written by [`MeasurementEnsemble::save`] and regenerate.
    pub fn load<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        match lines.next() {
            Some(Ok(l)) if l.trim_end() == ENSEMBLE_MAGIC => {}
            _ => {
                return Err(Error::Input(format!(
                    "missing `{ENSEMBLE_MAGIC}` header line"
                )))
            }
        }
        let (mut seed, mut n, mut count, mut law) = (None, None, None, None);
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Input(format!("line {}: expected key=value", lineno + 2)))?;
            let bad =
                |what: &str| Error::Input(format!("line {}: bad {what} `{value}`", lineno + 2));
            match key.trim() {
                "seed" => seed = Some(value.trim().parse::<u64>().map_err(|_| bad("seed"))?),
                "n" => n = Some(value.trim().parse::<usize>().map_err(|_| bad("n"))?),
                "N" => count = Some(value.trim().parse::<usize>().map_err(|_| bad("N"))?),
                "law" => law = Some(value.trim().parse::<LawKind>()?),
                other => {
                    return Err(Error::Input(format!(
                        "line {}: unknown key `{other}`",
                        lineno + 2
                    )))
                }
            }
        }
        let missing = |k: &str| Error::Input(format!("ensemble header lacks `{k}`"));
        sample_ensemble(
            n.ok_or_else(|| missing("n"))?,
            count.ok_or_else(|| missing("N"))?,
            SubgaussianLaw::new(law.ok_or_else(|| missing("law"))?),
            seed.ok_or_else(|| missing("seed"))?,
        )
    }
}

pub const ENSEMBLE_MAGIC: &str = "rankone-ensemble v1";

/// `a^* T a`, real part (exactly real for Hermitian `T`).
pub fn quadratic_form(t: &ComplexMatrix, a: &[Complex64]) -> f64 {
    let n = a.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for l in 0..n {
            row += t[(k, l)] * a[l];
        }
        acc += a[k].conj() * row;
    }
    acc.re
}

/// Nonnegative sparse vector stored by support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseNonnegSignal {
    dim: usize,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl SparseNonnegSignal {
    pub fn new(dim: usize, mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Input(format!("duplicate support index {}", w[0].0)));
            }
        }
        for &(i, v) in &entries {
            if i >= dim {
                return Err(Error::Input(format!(
                    "support index {i} outside [0, {dim})"
                )));
            }
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Input(format!(
                    "value {v} at index {i} is not strictly positive"
                )));
            }
        }
        let (support, values) = entries.into_iter().unzip();
        Ok(SparseNonnegSignal {
            dim,
            support,
            values,
        })
    }

    /// Support uniform over all `C(dim, s)` subsets, values `|g|` with `g ~ N(0,1)`.
    pub fn random<R: Rng + ?Sized>(dim: usize, s: usize, rng: &mut R) -> Result<Self> {
        if s > dim {
            return Err(Error::Parameter(format!(
                "sparsity {s} exceeds dimension {dim}"
            )));
        }
        let support = rand::seq::index::sample(rng, dim, s).into_vec();
        let entries = support
            .into_iter()
            .map(|i| {
                let mut v: f64 = 0.0;
                while v == 0.0 {
                    let g: f64 = StandardNormal.sample(rng);
                    v = g.abs();
                }
                (i, v)
            })
            .collect();
        Self::new(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        for (&i, &v) in self.support.iter().zip(&self.values) {
            x[i] = v;
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{frobenius_inner, p_vectorize};
    use approx::assert_relative_eq;

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_ensemble(4, 8, SubgaussianLaw::gaussian(), 7).unwrap();
        let b = sample_ensemble(4, 8, SubgaussianLaw::gaussian(), 7).unwrap();
        assert_eq!(a, b);
        let c = sample_ensemble(4, 8, SubgaussianLaw::gaussian(), 8).unwrap();
        assert_ne!(a, c);
        // vector i only depends on (seed, i)
        let d = sample_ensemble(4, 3, SubgaussianLaw::gaussian(), 7).unwrap();
        assert_eq!(d.vector(2), a.vector(2));
        assert_eq!(
            sample_vector(LawKind::ComplexGaussian, 4, 7, 5),
            a.vector(5)
        );
    }

    #[test]
    fn rademacher_has_unit_modulus() {
        let e = sample_ensemble(5, 40, LawKind::ComplexRademacher.into(), 1).unwrap();
        for a in e.vectors() {
            for z in a {
                assert!((z.norm_sqr() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn degenerate_dimension_rejected() {
        assert!(matches!(
            sample_ensemble(1, 3, SubgaussianLaw::gaussian(), 0),
            Err(Error::DegenerateDimension(_))
        ));
    }

    #[test]
    fn psi2_bounds_are_at_least_one() {
        for k in LawKind::ALL {
            assert!(SubgaussianLaw::new(k).psi2_bound >= 1.0);
        }
        assert_relative_eq!(SubgaussianLaw::gaussian().psi2_bound, (4.0f64 / 3.0).sqrt());
    }

    #[test]
    fn uniform_psi2_solves_orlicz_equation() {
        // midpoint rule for (1/b) int_0^b exp(x^2/t^2) dx
        let t = LawKind::UniformSymmetric.coordinate_psi2();
        let b = 1.5f64.sqrt();
        let steps = 200_000;
        let h = b / steps as f64;
        let integral: f64 = (0..steps)
            .map(|j| ((j as f64 + 0.5) * h / t).powi(2).exp() * h)
            .sum();
        assert!((integral / b - 2.0).abs() < 1e-8);
    }

    #[test]
    fn forward_of_unit_vector_is_rank_one() {
        let e = sample_ensemble(3, 5, SubgaussianLaw::gaussian(), 2).unwrap();
        let mut x = vec![0.0; 5];
        x[3] = 1.0;
        let y = e.forward(&x).unwrap();
        let expected = ComplexMatrix::outer(e.vector(3));
        assert!(y.sub(&expected).unwrap().frobenius_norm() < 1e-14);
        assert_eq!(e.forward(&[0.0; 5]).unwrap(), ComplexMatrix::zeros(3, 3));
        assert!(matches!(e.forward(&[1.0; 4]), Err(Error::Dimension(_))));
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn forward_matches_triple_loop() {
        let e = sample_ensemble(3, 5, SubgaussianLaw::gaussian(), 4).unwrap();
        let x = [0.3, -1.2, 2.0, 0.0, 0.7];
        let y = e.forward(&x).unwrap();
        for k in 0..3 {
            for l in 0..3 {
                let (mut re, mut im) = (0.0, 0.0);
                for i in 0..5 {
                    let (a, b) = (e.vector(i)[k].re, e.vector(i)[k].im);
                    let (c, d) = (e.vector(i)[l].re, -e.vector(i)[l].im);
                    re += x[i] * (a * c - b * d);
                    im += x[i] * (a * d + b * c);
                }
                assert!((y[(k, l)].re - re).abs() < 1e-12);
                assert!((y[(k, l)].im - im).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn adjoint_examples() {
        let e = sample_ensemble(4, 6, SubgaussianLaw::gaussian(), 3).unwrap();
        let w = e.adjoint(&ComplexMatrix::identity(4)).unwrap();
        for (wi, ni) in w.iter().zip(e.squared_norms()) {
            assert_relative_eq!(*wi, ni, max_relative = 1e-14);
        }
        assert!(e
            .adjoint(&ComplexMatrix::zeros(4, 4))
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
        let mut skew = ComplexMatrix::zeros(4, 4);
        skew[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(e.adjoint(&skew), Err(Error::Contract(_))));
    }

    #[test]
    fn adjoint_identity_holds() {
        let e = sample_ensemble(5, 9, SubgaussianLaw::gaussian(), 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = ComplexMatrix::from_fn(5, 5, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
        .hermitian_part()
        .unwrap();
        let x: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lhs = frobenius_inner(&e.forward(&x).unwrap(), &t).unwrap();
        let rhs: f64 = x
            .iter()
            .zip(e.adjoint(&t).unwrap())
            .map(|(a, b)| a * b)
            .sum();
        assert!(lhs.im.abs() < 1e-12);
        assert_relative_eq!(lhs.re, rhs, max_relative = 1e-10);
    }

    #[test]
    fn phi_columns_are_scaled_p_of_outer() {
        let e = sample_ensemble(4, 6, SubgaussianLaw::gaussian(), 9).unwrap();
        let phi = e.build_phi();
        assert_eq!(phi.shape(), (24, 6));
        let x = [0.5, 0.0, -1.0, 2.0, 0.1, 0.3];
        let px = p_vectorize(&e.forward(&x).unwrap()).unwrap();
        let phix = &phi * nalgebra::DVector::from_column_slice(&x);
        for i in 0..24 {
            assert!((phix[i] - px[i] / 24f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn design_matrix_is_isometric_embedding() {
        let e = sample_ensemble(4, 7, SubgaussianLaw::gaussian(), 5).unwrap();
        let d = e.design_matrix();
        let x = [0.5, 0.2, 0.0, 1.0, 3.0, 0.0, 0.1];
        let dx = &d * nalgebra::DVector::from_column_slice(&x);
        let emb = numerics::hermitian_embed(&e.forward(&x).unwrap());
        for (a, b) in dx.iter().zip(&emb) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn save_load_regenerates() {
        let e = sample_ensemble(6, 11, LawKind::UniformSymmetric.into(), 99).unwrap();
        let mut buf = Vec::new();
        e.save(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "rankone-ensemble v1\nseed=99\nn=6\nN=11\nlaw=uniform-symmetric\n"
        );
        let back = MeasurementEnsemble::load(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, e);
        assert!(MeasurementEnsemble::load(std::io::Cursor::new(b"junk\n".to_vec())).is_err());
    }

    #[test]
    fn signal_validation() {
        assert!(SparseNonnegSignal::new(5, vec![(1, 1.0), (1, 2.0)]).is_err());
        assert!(SparseNonnegSignal::new(5, vec![(5, 1.0)]).is_err());
        assert!(SparseNonnegSignal::new(5, vec![(2, 0.0)]).is_err());
        let s = SparseNonnegSignal::new(5, vec![(3, 2.0), (0, 1.0)]).unwrap();
        assert_eq!(s.support(), &[0, 3]);
        assert_eq!(s.to_dense(), vec![1.0, 0.0, 0.0, 2.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = SparseNonnegSignal::random(50, 7, &mut rng).unwrap();
        assert_eq!(r.sparsity(), 7);
        assert!(r.values().iter().all(|&v| v > 0.0));
    }
}

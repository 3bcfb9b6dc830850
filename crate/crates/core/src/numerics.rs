//! Dense complex linear algebra kernel.
//!
//! Matrices are stored row-major as [`Complex64`] entries. Real vectors are
//! plain `f64` slices; real matrices (the RIP matrix, the real embedding of
//! the measurement map) use [`nalgebra::DMatrix`].

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type RealMatrix = DMatrix<f64>;

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for k in 0..n {
            m[(k, k)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    /// Rank-one matrix `a a*`.
    pub fn outer(a: &[Complex64]) -> Self {
        Self::from_fn(a.len(), a.len(), |k, l| a[k] * a[l].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        let m = DMatrix::from_row_slice(self.rows, self.cols, &self.data);
        m.singular_values().max()
    }

    pub fn scaled(&self, t: f64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * t).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Largest entrywise modulus of `self - self*`.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for k in 0..n {
            for l in k..n {
                worst = worst.max((self[(k, l)] - self[(l, k)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    /// `(M + M*)/2`.
    pub fn hermitian_part(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Dimension(format!(
                "hermitian part of a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        Ok(Self::from_fn(self.rows, self.cols, |k, l| {
            (self[(k, l)] + self[(l, k)].conj()) * 0.5
        }))
    }

    pub fn has_non_finite(&self) -> bool {
        self.data
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Hilbert-Schmidt inner product `trace(X* Y)`, conjugate-linear in `x`.
pub fn frobenius_inner(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<Complex64> {
    x.check_same_shape(y)?;
    Ok(x.data.iter().zip(&y.data).map(|(a, b)| a.conj() * b).sum())
}

/// Length of the off-diagonal vectorization of an `n x n` matrix, `2n(n-1)`.
pub fn off_diagonal_dim(n: usize) -> usize {
    2 * n * (n.saturating_sub(1))
}

/// Off-diagonal vectorization operator.
///
/// Output layout: first the block `sqrt(2) Re M[k][l]`, then the block
/// `sqrt(2) Im M[k][l]`. Inside each block the pairs `(k, l)` with `k != l`
/// run row-major (`k` outer, `l` inner, diagonal skipped), so for `n = 3` the
/// order is `(0,1) (0,2) (1,0) (1,2) (2,0) (2,1)`.
pub fn p_vectorize(m: &ComplexMatrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "P needs a square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    let n = m.rows;
    if n < 2 {
        return Err(Error::DegenerateDimension(format!(
            "P of a {n}x{n} matrix has no off-diagonal entries"
        )));
    }
    let half = n * (n - 1);
    let mut out = vec![0.0; 2 * half];
    p_vectorize_into(m, &mut out);
    Ok(out)
}

/// Unchecked worker behind [`p_vectorize`]; `out` must hold `2n(n-1)` entries.
pub(crate) fn p_vectorize_into(m: &ComplexMatrix, out: &mut [f64]) {
    let n = m.rows;
    let half = n * (n - 1);
    let (re, im) = out.split_at_mut(half);
    let mut idx = 0;
    for k in 0..n {
        for l in 0..n {
            if k == l {
                continue;
            }
            let z = m[(k, l)];
            re[idx] = std::f64::consts::SQRT_2 * z.re;
            im[idx] = std::f64::consts::SQRT_2 * z.im;
            idx += 1;
        }
    }
}

/// Isometric real coordinates of a Hermitian matrix.
///
/// Layout: the `n` diagonal real parts, then `sqrt(2) Re M[k][l]` for `k < l`
/// (row-major), then `sqrt(2) Im M[k][l]` for `k < l`. For Hermitian `M` the
/// Euclidean norm of the output equals `||M||_F`; for general `M` this is the
/// embedding of the Hermitian part.
pub fn hermitian_embed(m: &ComplexMatrix) -> Vec<f64> {
    let n = m.rows;
    let mut out = vec![0.0; n * n];
    hermitian_embed_into(m, &mut out);
    out
}

pub(crate) fn hermitian_embed_into(m: &ComplexMatrix, out: &mut [f64]) {
    let n = m.rows;
    let upper = n * (n - 1) / 2;
    for k in 0..n {
        out[k] = m[(k, k)].re;
    }
    let mut idx = 0;
    for k in 0..n {
        for l in (k + 1)..n {
            // average of the two triangles, i.e. the Hermitian part
            let z = (m[(k, l)] + m[(l, k)].conj()) * 0.5;
            out[n + idx] = std::f64::consts::SQRT_2 * z.re;
            out[n + upper + idx] = std::f64::consts::SQRT_2 * z.im;
            idx += 1;
        }
    }
}

/// Inverse of [`hermitian_embed`].
pub fn hermitian_unembed(v: &[f64], n: usize) -> Result<ComplexMatrix> {
    if v.len() != n * n {
        return Err(Error::Dimension(format!(
            "{} coordinates for a {n}x{n} Hermitian matrix",
            v.len()
        )));
    }
    let upper = n * (n - 1) / 2;
    let mut m = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        m[(k, k)] = Complex64::new(v[k], 0.0);
    }
    let mut idx = 0;
    for k in 0..n {
        for l in (k + 1)..n {
            let z = Complex64::new(v[n + idx], v[n + upper + idx]) / std::f64::consts::SQRT_2;
            m[(k, l)] = z;
            m[(l, k)] = z.conj();
            idx += 1;
        }
    }
    Ok(m)
}

/// The `l_p` norm for `p >= 1`; `p = f64::INFINITY` gives the max modulus.
pub fn lp_norm(v: &[f64], p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Parameter(format!("l_p norm needs p >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(v.iter().fold(0.0f64, |acc, x| acc.max(x.abs())));
    }
    if p == 1.0 {
        return Ok(v.iter().map(|x| x.abs()).sum());
    }
    if p == 2.0 {
        return Ok(v.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    // rescale by the max modulus to keep powers in range
    let scale = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = v.iter().map(|x| (x.abs() / scale).powf(p)).sum();
    Ok(scale * sum.powf(1.0 / p))
}

/// Best `s`-term approximation error in `l_1`: the sum of the `N - s`
/// smallest magnitudes of `x`.
pub fn best_s_term_residual(x: &[f64], s: usize) -> Result<f64> {
    let len = x.len();
    if s > len {
        return Err(Error::Parameter(format!(
            "s = {s} exceeds the dimension {len}"
        )));
    }
    if s == len {
        return Ok(0.0);
    }
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let tail = len - s;
    // after partitioning, the first `tail` entries are the smallest ones
    mags.select_nth_unstable_by(tail - 1, |a, b| a.total_cmp(b));
    Ok(mags[..tail].iter().sum())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn complex_norm2(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

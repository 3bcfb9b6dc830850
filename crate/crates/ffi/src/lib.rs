//! C ABI over the `rankone` library.
//!
//! Objects cross the boundary as opaque handles created by `*_new` or
//! `*_sample` functions and released with the matching `*_free`. Every
//! fallible call returns a [`RankoneStatus`]; on failure the message is kept
//! per thread and can be read with [`rankone_last_error_message`].
//!
//! Complex matrices are passed as two row-major `n * n` arrays of real and
//! imaginary parts.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;
use rankone::certificates;
use rankone::ensemble::{sample_ensemble, LawKind, MeasurementEnsemble, SubgaussianLaw};
use rankone::numerics::ComplexMatrix;
use rankone::solver::{Algorithm, NnlsProblem, SolverConfig};
use rankone::Error;

/// Result codes; the nonzero values match the command-line exit statuses where they overlap.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankoneStatus {
    Ok = 0,
    /// Dimension mismatch, I/O or other internal failure.
    Failure = 1,
    /// Invalid parameter or input.
    InvalidArgument = 2,
    /// Parameters outside the admissible domain or infeasible.
    Infeasible = 3,
    /// Precondition or combinatorial guard violated.
    Precondition = 4,
    /// Solver stopped at the iteration cap; outputs hold the best iterate.
    NonConvergence = 5,
    NullPointer = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankoneLaw {
    ComplexGaussian = 0,
    ComplexRademacher = 1,
    UniformSymmetric = 2,
    RealGaussian = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankoneAlgorithm {
    ActiveSet = 0,
    ProjectedGradient = 1,
}

/// Opaque measurement ensemble.
pub struct RankoneEnsemble {
    inner: MeasurementEnsemble,
}

/// Opaque solver bound to one ensemble; reuses the design matrix across solves.
pub struct RankoneProblem {
    inner: NnlsProblem,
    count: usize,
}

/// Solver settings; obtain defaults from [`rankone_solver_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct RankoneSolverOptions {
    pub algorithm: RankoneAlgorithm,
    pub kkt_tolerance: f64,
    pub max_iterations: usize,
}

/// Scalar outcome of a solve; the estimate itself goes to a caller buffer.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct RankoneSolveSummary {
    pub residual_frobenius: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub hermitized: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = clean);
}

fn status_of(e: &Error) -> RankoneStatus {
    match e.exit_code() {
        2 => RankoneStatus::InvalidArgument,
        3 => RankoneStatus::Infeasible,
        4 => RankoneStatus::Precondition,
        5 => RankoneStatus::NonConvergence,
        _ => RankoneStatus::Failure,
    }
}

fn guard(f: impl FnOnce() -> Result<(), RankoneStatus>) -> RankoneStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RankoneStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("panic inside rankone");
            RankoneStatus::Panic
        }
    }
}

fn fail(e: Error) -> RankoneStatus {
    set_error(&e.to_string());
    status_of(&e)
}

fn null(what: &str) -> RankoneStatus {
    set_error(&format!("null pointer: {what}"));
    RankoneStatus::NullPointer
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], RankoneStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(
    p: *mut T,
    len: usize,
    what: &str,
) -> Result<&'a mut [T], RankoneStatus> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn matrix_in(
    re: *const f64,
    im: *const f64,
    n: usize,
) -> Result<ComplexMatrix, RankoneStatus> {
    let re = slice(re, n * n, "real part")?;
    let im = slice(im, n * n, "imaginary part")?;
    let data = re
        .iter()
        .zip(im)
        .map(|(&a, &b)| Complex64::new(a, b))
        .collect();
    ComplexMatrix::from_row_major(n, n, data).map_err(fail)
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn rankone_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rankone_version() -> *const c_char {
    static VERSION: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(v) => v,
            Err(_) => c"",
        };
    VERSION.as_ptr()
}

/// Draw `count` vectors in `C^n` from `law`, deterministically from `seed`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn rankone_ensemble_sample(
    n: usize,
    count: usize,
    law: RankoneLaw,
    seed: u64,
    out: *mut *mut RankoneEnsemble,
) -> RankoneStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let kind = match law {
            RankoneLaw::ComplexGaussian => LawKind::ComplexGaussian,
            RankoneLaw::ComplexRademacher => LawKind::ComplexRademacher,
            RankoneLaw::UniformSymmetric => LawKind::UniformSymmetric,
            RankoneLaw::RealGaussian => LawKind::RealGaussian,
        };
        let inner = sample_ensemble(n, count, SubgaussianLaw::new(kind), seed).map_err(fail)?;
        *out = Box::into_raw(Box::new(RankoneEnsemble { inner }));
        Ok(())
    })
}

/// Ensemble from explicit vectors: `count` rows of `n` complex entries, row-major.
///
/// # Safety
/// `re` and `im` must each point to `n * count` readable doubles; `out` as above.
#[no_mangle]
pub unsafe extern "C" fn rankone_ensemble_from_vectors(
    n: usize,
    count: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut RankoneEnsemble,
) -> RankoneStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let re = slice(re, n * count, "re")?;
        let im = slice(im, n * count, "im")?;
        let vectors = (0..count)
            .map(|i| {
                (0..n)
                    .map(|k| Complex64::new(re[i * n + k], im[i * n + k]))
                    .collect()
            })
            .collect();
        let inner = MeasurementEnsemble::from_vectors(vectors).map_err(fail)?;
        *out = Box::into_raw(Box::new(RankoneEnsemble { inner }));
        Ok(())
    })
}

/// Release an ensemble; null is ignored.
///
/// # Safety
/// `e` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rankone_ensemble_free(e: *mut RankoneEnsemble) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Vector dimension `n`, or 0 for a null handle.
///
/// # Safety
/// `e` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rankone_ensemble_dim(e: *const RankoneEnsemble) -> usize {
    e.as_ref().map_or(0, |e| e.inner.n())
}

/// Number of vectors `N`, or 0 for a null handle.
///
/// # Safety
/// `e` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rankone_ensemble_len(e: *const RankoneEnsemble) -> usize {
    e.as_ref().map_or(0, |e| e.inner.len())
}

/// `A(x) = sum_i x_i a_i a_i^*` into `out_re`, `out_im` (`n * n` each).
///
/// # Safety
/// `x` must hold `N` doubles and the outputs `n * n` writable doubles each.
#[no_mangle]
pub unsafe extern "C" fn rankone_ensemble_forward(
    e: *const RankoneEnsemble,
    x: *const f64,
    x_len: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> RankoneStatus {
    guard(|| {
        let e = e.as_ref().ok_or_else(|| null("ensemble"))?;
        let x = slice(x, x_len, "x")?;
        let y = e.inner.forward(x).map_err(fail)?;
        let n = e.inner.n();
        let re = slice_mut(out_re, n * n, "out_re")?;
        let im = slice_mut(out_im, n * n, "out_im")?;
        for (k, z) in y.as_slice().iter().enumerate() {
            re[k] = z.re;
            im[k] = z.im;
        }
        Ok(())
    })
}

/// `A^*(T)_i = <a_i, T a_i>` for Hermitian `T` into `out` (`N` doubles).
///
/// # Safety
/// `t_re`, `t_im` must hold `n * n` doubles each and `out` `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rankone_ensemble_adjoint(
    e: *const RankoneEnsemble,
    t_re: *const f64,
    t_im: *const f64,
    out: *mut f64,
    out_len: usize,
) -> RankoneStatus {
    guard(|| {
        let e = e.as_ref().ok_or_else(|| null("ensemble"))?;
        let t = matrix_in(t_re, t_im, e.inner.n())?;
        let w = e.inner.adjoint(&t).map_err(fail)?;
        if out_len != w.len() {
            return Err(fail(Error::Dimension(format!(
                "output holds {out_len} entries, need {}",
                w.len()
            ))));
        }
        slice_mut(out, out_len, "out")?.copy_from_slice(&w);
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn rankone_solver_options_default() -> RankoneSolverOptions {
    let d = SolverConfig::default();
    RankoneSolverOptions {
        algorithm: RankoneAlgorithm::ActiveSet,
        kkt_tolerance: d.kkt_tolerance,
        max_iterations: d.max_iterations,
    }
}

/// Build a reusable solver for `e`. The ensemble may be freed afterwards.
///
/// # Safety
/// `e` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rankone_problem_new(
    e: *const RankoneEnsemble,
    out: *mut *mut RankoneProblem,
) -> RankoneStatus {
    guard(|| {
        let e = e.as_ref().ok_or_else(|| null("ensemble"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(RankoneProblem {
            inner: NnlsProblem::new(&e.inner),
            count: e.inner.len(),
        }));
        Ok(())
    })
}

/// # Safety
/// `p` must come from [`rankone_problem_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rankone_problem_free(p: *mut RankoneProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Solve `min_{z >= 0} ||A(z) - Y||_F`, writing `z` to `x_out` (`N` doubles).
///
/// Returns [`RankoneStatus::NonConvergence`] with valid outputs when the
/// iteration cap was reached. `options` and `summary` may be null.
///
/// # Safety
/// `y_re`, `y_im` must hold `n * n` doubles and `x_out` `x_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rankone_problem_solve(
    p: *const RankoneProblem,
    y_re: *const f64,
    y_im: *const f64,
    options: *const RankoneSolverOptions,
    x_out: *mut f64,
    x_len: usize,
    summary: *mut RankoneSolveSummary,
) -> RankoneStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("problem"))?;
        let y = matrix_in(y_re, y_im, p.inner.n())?;
        let opts = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| rankone_solver_options_default());
        let cfg = SolverConfig {
            kkt_tolerance: opts.kkt_tolerance,
            max_iterations: opts.max_iterations,
            algorithm: match opts.algorithm {
                RankoneAlgorithm::ActiveSet => Algorithm::ActiveSet,
                RankoneAlgorithm::ProjectedGradient => Algorithm::ProjectedGradient,
            },
            record_objective: false,
        };
        if x_len != p.count {
            return Err(fail(Error::Dimension(format!(
                "output holds {x_len} entries, need {}",
                p.count
            ))));
        }
        let rep = p.inner.solve(&y, &cfg).map_err(fail)?;
        slice_mut(x_out, x_len, "x_out")?.copy_from_slice(&rep.x_sharp);
        if let Some(s) = summary.as_mut() {
            *s = RankoneSolveSummary {
                residual_frobenius: rep.residual_frobenius,
                kkt_residual: rep.kkt_residual,
                iterations: rep.iterations,
                converged: rep.converged,
                hermitized: rep.hermitized,
            };
        }
        if !rep.converged {
            set_error("iteration cap reached before the KKT tolerance");
            return Err(RankoneStatus::NonConvergence);
        }
        Ok(())
    })
}

/// `rho` and `tau` of the `l_2` nullspace property implied by RIP constant `delta`.
///
/// # Safety
/// `rho` and `tau` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rankone_rip_to_nsp(
    delta: f64,
    rho: *mut f64,
    tau: *mut f64,
) -> RankoneStatus {
    guard(|| {
        if rho.is_null() || tau.is_null() {
            return Err(null("rho/tau"));
        }
        let c = certificates::rip_to_nsp(delta, 1).map_err(fail)?;
        *rho = c.rho;
        *tau = c.tau;
        Ok(())
    })
}

/// Constants `c2`, `c3`, `c4` of the subgaussian recovery bound.
///
/// # Safety
/// The three outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn rankone_recovery_constants(
    eta: f64,
    delta: f64,
    c2: *mut f64,
    c3: *mut f64,
    c4: *mut f64,
) -> RankoneStatus {
    guard(|| {
        if c2.is_null() || c3.is_null() || c4.is_null() {
            return Err(null("c2/c3/c4"));
        }
        let c = certificates::theorem2_constants(eta, delta).map_err(fail)?;
        *c2 = c.c2;
        *c3 = c.c3;
        *c4 = c.c4;
        Ok(())
    })
}

/// Largest admissible `2s` for dimension `n`, `count` vectors and `alpha`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rankone_sparsity_threshold(
    n: usize,
    count: usize,
    alpha: f64,
    out: *mut usize,
) -> RankoneStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = certificates::sparsity_threshold(n, count, alpha).map_err(fail)?;
        Ok(())
    })
}

/// Owned copy of [`rankone_last_error_message`] for Rust callers.
pub fn last_error() -> String {
    let p = rankone_last_error_message();
    if p.is_null() {
        return String::new();
    }
    // SAFETY: points into the thread-local buffer, valid until the next call
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

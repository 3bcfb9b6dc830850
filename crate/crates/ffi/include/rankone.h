#ifndef RANKONE_H
#define RANKONE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes; the nonzero values match the command-line exit statuses where they overlap.
 */
typedef enum RankoneStatus {
  RANKONE_STATUS_OK = 0,
  /**
   * Dimension mismatch, I/O or other internal failure.
   */
  RANKONE_STATUS_FAILURE = 1,
  /**
   * Invalid parameter or input.
   */
  RANKONE_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Parameters outside the admissible domain or infeasible.
   */
  RANKONE_STATUS_INFEASIBLE = 3,
  /**
   * Precondition or combinatorial guard violated.
   */
  RANKONE_STATUS_PRECONDITION = 4,
  /**
   * Solver stopped at the iteration cap; outputs hold the best iterate.
   */
  RANKONE_STATUS_NON_CONVERGENCE = 5,
  RANKONE_STATUS_NULL_POINTER = 6,
  RANKONE_STATUS_PANIC = 7,
} RankoneStatus;

typedef enum RankoneLaw {
  RANKONE_LAW_COMPLEX_GAUSSIAN = 0,
  RANKONE_LAW_COMPLEX_RADEMACHER = 1,
  RANKONE_LAW_UNIFORM_SYMMETRIC = 2,
  RANKONE_LAW_REAL_GAUSSIAN = 3,
} RankoneLaw;

typedef enum RankoneAlgorithm {
  RANKONE_ALGORITHM_ACTIVE_SET = 0,
  RANKONE_ALGORITHM_PROJECTED_GRADIENT = 1,
} RankoneAlgorithm;

/**
 * Opaque measurement ensemble.
 */
typedef struct RankoneEnsemble RankoneEnsemble;

/**
 * Opaque solver bound to one ensemble; reuses the design matrix across solves.
 */
typedef struct RankoneProblem RankoneProblem;

/**
 * Solver settings; obtain defaults from [`rankone_solver_options_default`].
 */
typedef struct RankoneSolverOptions {
  enum RankoneAlgorithm algorithm;
  double kkt_tolerance;
  size_t max_iterations;
} RankoneSolverOptions;

/**
 * Scalar outcome of a solve; the estimate itself goes to a caller buffer.
 */
typedef struct RankoneSolveSummary {
  double residual_frobenius;
  double kkt_residual;
  size_t iterations;
  bool converged;
  bool hermitized;
} RankoneSolveSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *rankone_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rankone_version(void);

/**
 * Draw `count` vectors in `C^n` from `law`, deterministically from `seed`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum RankoneStatus rankone_ensemble_sample(size_t n,
                                           size_t count,
                                           enum RankoneLaw law,
                                           uint64_t seed,
                                           struct RankoneEnsemble **out);

/**
 * Ensemble from explicit vectors: `count` rows of `n` complex entries, row-major.
 *
 * # Safety
 * `re` and `im` must each point to `n * count` readable doubles; `out` as above.
 */
enum RankoneStatus rankone_ensemble_from_vectors(size_t n,
                                                 size_t count,
                                                 const double *re,
                                                 const double *im,
                                                 struct RankoneEnsemble **out);

/**
 * Release an ensemble; null is ignored.
 *
 * # Safety
 * `e` must come from this library and not be used afterwards.
 */
void rankone_ensemble_free(struct RankoneEnsemble *e);

/**
 * Vector dimension `n`, or 0 for a null handle.
 *
 * # Safety
 * `e` must be null or a live handle.
 */
size_t rankone_ensemble_dim(const struct RankoneEnsemble *e);

/**
 * Number of vectors `N`, or 0 for a null handle.
 *
 * # Safety
 * `e` must be null or a live handle.
 */
size_t rankone_ensemble_len(const struct RankoneEnsemble *e);

/**
 * `A(x) = sum_i x_i a_i a_i^*` into `out_re`, `out_im` (`n * n` each).
 *
 * # Safety
 * `x` must hold `N` doubles and the outputs `n * n` writable doubles each.
 */
enum RankoneStatus rankone_ensemble_forward(const struct RankoneEnsemble *e,
                                            const double *x,
                                            size_t x_len,
                                            double *out_re,
                                            double *out_im);

/**
 * `A^*(T)_i = <a_i, T a_i>` for Hermitian `T` into `out` (`N` doubles).
 *
 * # Safety
 * `t_re`, `t_im` must hold `n * n` doubles each and `out` `out_len` writable doubles.
 */
enum RankoneStatus rankone_ensemble_adjoint(const struct RankoneEnsemble *e,
                                            const double *t_re,
                                            const double *t_im,
                                            double *out,
                                            size_t out_len);

struct RankoneSolverOptions rankone_solver_options_default(void);

/**
 * Build a reusable solver for `e`. The ensemble may be freed afterwards.
 *
 * # Safety
 * `e` must be a live handle and `out` writable.
 */
enum RankoneStatus rankone_problem_new(const struct RankoneEnsemble *e,
                                       struct RankoneProblem **out);

/**
 * # Safety
 * `p` must come from [`rankone_problem_new`] and not be used afterwards.
 */
void rankone_problem_free(struct RankoneProblem *p);

/**
 * Solve `min_{z >= 0} ||A(z) - Y||_F`, writing `z` to `x_out` (`N` doubles).
 *
 * Returns [`RankoneStatus::NonConvergence`] with valid outputs when the
 * iteration cap was reached. `options` and `summary` may be null.
 *
 * # Safety
 * `y_re`, `y_im` must hold `n * n` doubles and `x_out` `x_len` writable doubles.
 */
enum RankoneStatus rankone_problem_solve(const struct RankoneProblem *p,
                                         const double *y_re,
                                         const double *y_im,
                                         const struct RankoneSolverOptions *options,
                                         double *x_out,
                                         size_t x_len,
                                         struct RankoneSolveSummary *summary);

/**
 * `rho` and `tau` of the `l_2` nullspace property implied by RIP constant `delta`.
 *
 * # Safety
 * `rho` and `tau` must be writable.
 */
enum RankoneStatus rankone_rip_to_nsp(double delta, double *rho, double *tau);

/**
 * Constants `c2`, `c3`, `c4` of the subgaussian recovery bound.
 *
 * # Safety
 * The three outputs must be writable.
 */
enum RankoneStatus rankone_recovery_constants(double eta,
                                              double delta,
                                              double *c2,
                                              double *c3,
                                              double *c4);

/**
 * Largest admissible `2s` for dimension `n`, `count` vectors and `alpha`.
 *
 * # Safety
 * `out` must be writable.
 */
enum RankoneStatus rankone_sparsity_threshold(size_t n, size_t count, double alpha, size_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RANKONE_H */

#ifndef GBM_CUTOFF_H
#define GBM_CUTOFF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum GbmStatus {
  GBM_OK = 0,
  GBM_NULL_POINTER,
  GBM_PANIC,
  GBM_DIM_MISMATCH,
  GBM_INVALID_MATRIX,
  GBM_NON_FINITE,
  GBM_EIG_FAILURE,
  GBM_NOT_SYMMETRIC,
  GBM_NOT_COMMUTING,
  GBM_JOINT_DIAG_FAILURE,
  GBM_ZERO_VECTOR,
  GBM_NOT_STABLE,
  GBM_HYPOTHESES_VIOLATED,
  GBM_NOT_DIAGONALIZABLE,
  GBM_OSCILLATORY_PROFILE,
  GBM_AMBIGUOUS_ROOTS,
  GBM_NO_REAL_ROOT,
  GBM_BRACKET_FAILURE,
  GBM_NO_STABILIZER,
  GBM_X_ORTHOGONAL,
  GBM_BRANCH_VIOLATION,
  GBM_REPRESENTATION_INVALID,
  GBM_NO_DECAY,
  GBM_INVALID_ARGUMENT,
} GbmStatus;

typedef enum GbmRegime {
  GBM_REGIME_COMMUTATIVE = 0,
  GBM_REGIME_FIRST_ORDER,
  GBM_REGIME_SYNTHETIC,
  GBM_REGIME_NO_DECAY,
} GbmRegime;

typedef enum GbmScheme {
  GBM_EXACT_COMMUTATIVE = 0,
  GBM_EXACT_FIRST_ORDER,
  GBM_EULER_MARUYAMA,
  GBM_MAGNUS_TRUNCATED,
} GbmScheme;

/**
 * Mode-level system with its decomposition.
 */
typedef struct GbmSynthetic GbmSynthetic;

/**
 * Coefficient pair `(A, B)` with initial value `x`.
 */
typedef struct GbmSystem GbmSystem;

/**
 * Hypothesis verdicts.
 */
typedef struct GbmHypotheses {
  bool normal_b;
  bool commutative;
  bool normal_c;
  bool first_order;
  bool hypothesis_set_infeasible;
} GbmHypotheses;

/**
 * Cutoff schedule. Entries that do not apply are NaN (reals) or -1
 * (integers).
 */
typedef struct GbmSchedule {
  enum GbmRegime regime;
  double eps;
  double q;
  int64_t ell;
  double gamma;
  double b;
  double a;
  int64_t ell_star;
  double t_eps;
  double w_eps;
  double r_eps;
  double big_t_eps;
  double tau_eps;
  /**
   * 1-based.
   */
  int64_t selected_mode;
} GbmSchedule;

/**
 * Monte Carlo estimate of the mean square.
 */
typedef struct GbmEstimate {
  double value;
  double std_error;
} GbmEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. Valid until the next
 * failing call on the same thread.
 */
const char *gbm_last_error(void);

/**
 * Creates a system from row-major `A`, `B` (`dim * dim`) and `x` (`dim`).
 *
 * # Safety
 * Pointers must be valid for the stated lengths; `out` must be writable.
 */
enum GbmStatus gbm_system_new(size_t dim,
                              const double *a,
                              const double *b,
                              const double *x,
                              struct GbmSystem **out);

/**
 * # Safety
 * `sys` must come from [`gbm_system_new`] and not be freed twice.
 */
void gbm_system_free(struct GbmSystem *sys);

/**
 * # Safety
 * `sys` must be a live handle; `out` must be writable.
 */
enum GbmStatus gbm_check_hypotheses(const struct GbmSystem *sys, struct GbmHypotheses *out);

/**
 * Closed-form `E|X_t|²` of a commuting pair.
 *
 * # Safety
 * `sys` must be a live handle; `out` must be writable.
 */
enum GbmStatus gbm_mean_square_commutative(const struct GbmSystem *sys, double t, double *out);

/**
 * Cutoff schedule of a commuting pair with window `w`.
 *
 * # Safety
 * `sys` must be a live handle; `out` must be writable.
 */
enum GbmStatus gbm_cutoff_commutative(const struct GbmSystem *sys,
                                      double eps,
                                      double w,
                                      struct GbmSchedule *out);

/**
 * δ-mixing time of a commuting pair.
 *
 * # Safety
 * `sys` must be a live handle; `out` must be writable.
 */
enum GbmStatus gbm_mixing_time_commutative(const struct GbmSystem *sys,
                                           double eps,
                                           double delta,
                                           double *out);

/**
 * Monte Carlo estimate of `E|X_t|²`, reproducible for a given seed.
 *
 * # Safety
 * `sys` must be a live handle; `out` must be writable.
 */
enum GbmStatus gbm_estimate_mean_square(const struct GbmSystem *sys,
                                        double t,
                                        enum GbmScheme scheme,
                                        size_t n_paths,
                                        double dt,
                                        uint64_t seed,
                                        struct GbmEstimate *out);

/**
 * Creates a mode-level system from row-major `alpha`, `beta`, `gamma`, `a`
 * and `x`, and decomposes it.
 *
 * # Safety
 * Pointers must be valid for the stated lengths; `out` must be writable.
 */
enum GbmStatus gbm_synthetic_new(size_t dim,
                                 const double *alpha,
                                 const double *beta,
                                 const double *gamma,
                                 const double *a,
                                 const double *x,
                                 struct GbmSynthetic **out);

/**
 * # Safety
 * `sys` must come from [`gbm_synthetic_new`] and not be freed twice.
 */
void gbm_synthetic_free(struct GbmSynthetic *sys);

/**
 * # Safety
 * `sys` must be a live handle; `out` must be writable.
 */
enum GbmStatus gbm_mean_square_synthetic(const struct GbmSynthetic *sys, double t, double *out);

/**
 * # Safety
 * `sys` must be a live handle; `out` must be writable.
 */
enum GbmStatus gbm_cutoff_synthetic(const struct GbmSynthetic *sys,
                                    double eps,
                                    struct GbmSchedule *out);

/**
 * # Safety
 * `sys` must be a live handle; `out` must be writable.
 */
enum GbmStatus gbm_mixing_time_synthetic(const struct GbmSynthetic *sys,
                                         double eps,
                                         double delta,
                                         double *out);

/**
 * Unique real root of `c3 t³ + c2 t² + c1 t + c0`.
 *
 * # Safety
 * `out` must be writable.
 */
enum GbmStatus gbm_cardano(double c3, double c2, double c1, double c0, double *out);

/**
 * Inverse of `t ↦ e^{−t³−t²}` for `x ∈ (0, 1)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum GbmStatus gbm_example35_g(double x, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GBM_CUTOFF_H */

#ifndef MRNPRK_H
#define MRNPRK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum MrnprkStatus {
  MRNPRK_STATUS_OK = 0,
  MRNPRK_STATUS_NULL_POINTER = 1,
  /**
   * Bad method name, malformed tableau, size mismatch and similar.
   */
  MRNPRK_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Newton divergence, singular systems, non-finite states.
   */
  MRNPRK_STATUS_NUMERICAL = 3,
  /**
   * A user callback returned a nonzero code.
   */
  MRNPRK_STATUS_CALLBACK = 4,
  MRNPRK_STATUS_IO = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  MRNPRK_STATUS_PANIC = 6,
} MrnprkStatus;

/**
 * A resolved integration method.
 */
typedef struct MrnprkMethod MrnprkMethod;

/**
 * A partitioned right-hand side backed by C callbacks.
 */
typedef struct MrnprkSystem MrnprkSystem;

/**
 * Writes `F(u, v)` into `out`; all arrays have length `n`. Nonzero return
 * aborts the step with [`MrnprkStatus::Callback`].
 */
typedef int (*MrnprkEvalFn)(void *user, size_t n, const double *u, const double *v, double *out);

/**
 * Solves `Y = rhs + gamma_h F(Y, v)` into `out`. Nonzero return aborts the
 * step with [`MrnprkStatus::Callback`].
 */
typedef int (*MrnprkSolveFn)(void *user,
                             size_t n,
                             double gamma_h,
                             const double *v,
                             const double *rhs,
                             double *out);

/**
 * Implicit-solve settings.
 */
typedef struct MrnprkSolverConfig {
  double tol;
  size_t max_iter;
  /**
   * Nonzero: fail instead of falling back to Newton iterations.
   */
  int hook_only;
} MrnprkSolverConfig;

/**
 * Work counters.
 */
typedef struct MrnprkStats {
  size_t steps;
  size_t f_evals;
  size_t solves;
  size_t newton_iters;
  size_t newton_f_evals;
} MrnprkStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null.
 *
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *mrnprk_last_error(void);

/**
 * Looks up a method by registry name or JSON file path.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MrnprkStatus mrnprk_method_new(const char *name, struct MrnprkMethod **out);

/**
 * Releases a method; null is ignored.
 *
 * # Safety
 * `m` must come from [`mrnprk_method_new`] and not be used afterwards.
 */
void mrnprk_method_free(struct MrnprkMethod *m);

/**
 * Number of stages of the coefficient tensor.
 *
 * # Safety
 * `m` must be a live handle and `out` a valid pointer.
 */
enum MrnprkStatus mrnprk_method_stages(const struct MrnprkMethod *m, size_t *out);

/**
 * Nominal order and the order verified from the order conditions at `tol`.
 *
 * # Safety
 * `m` must be a live handle; the output pointers must be valid.
 */
enum MrnprkStatus mrnprk_method_order(const struct MrnprkMethod *m,
                                      double tol,
                                      size_t *nominal,
                                      size_t *verified);

/**
 * Coefficient tensor as a JSON string; free it with [`mrnprk_string_free`].
 *
 * # Safety
 * `m` must be a live handle and `out` a valid pointer.
 */
enum MrnprkStatus mrnprk_method_to_json(const struct MrnprkMethod *m, char **out);

/**
 * Releases a string returned by this library; null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void mrnprk_string_free(char *s);

/**
 * Joint stability function `R(z1, z2)`.
 *
 * # Safety
 * `m` must be a live handle; the output pointers must be valid.
 */
enum MrnprkStatus mrnprk_stability(const struct MrnprkMethod *m,
                                   double z1_re,
                                   double z1_im,
                                   double z2_re,
                                   double z2_im,
                                   double *out_re,
                                   double *out_im);

/**
 * `|R|` in the stiff limit `z1 -> -inf` at fixed `z2`.
 *
 * # Safety
 * `m` must be a live handle and `modulus` a valid pointer.
 */
enum MrnprkStatus mrnprk_stiff_limit(const struct MrnprkMethod *m,
                                     double z2_re,
                                     double z2_im,
                                     double *modulus);

/**
 * Creates a system of dimension `n`. `solve` may be null, in which case
 * implicit stages use Newton iterations on `eval`.
 *
 * # Safety
 * The callbacks must be safe to call with `user` for the lifetime of the
 * handle; `out` must be a valid pointer.
 */
enum MrnprkStatus mrnprk_system_new(size_t n,
                                    MrnprkEvalFn eval,
                                    MrnprkSolveFn solve,
                                    void *user,
                                    struct MrnprkSystem **out);

/**
 * Releases a system; null is ignored.
 *
 * # Safety
 * `s` must come from [`mrnprk_system_new`] and not be used afterwards.
 */
void mrnprk_system_free(struct MrnprkSystem *s);

/**
 * Default implicit-solve settings.
 */
struct MrnprkSolverConfig mrnprk_solver_config_default(void);

/**
 * Integrates `y` (length `n`) in place from `t0` to `t1` with `nsteps`
 * uniform steps. `cfg` and `stats` may be null.
 *
 * # Safety
 * Handles must be live; `y` must hold `n` values; `stats`, if non-null,
 * must be valid.
 */
enum MrnprkStatus mrnprk_integrate(const struct MrnprkMethod *m,
                                   struct MrnprkSystem *sys,
                                   double *y,
                                   size_t n,
                                   double t0,
                                   double t1,
                                   size_t nsteps,
                                   const struct MrnprkSolverConfig *cfg,
                                   struct MrnprkStats *stats);

/**
 * Advances `y` (length `n`) by one step of size `h` in place.
 *
 * # Safety
 * As for [`mrnprk_integrate`].
 */
enum MrnprkStatus mrnprk_step(const struct MrnprkMethod *m,
                              struct MrnprkSystem *sys,
                              double *y,
                              size_t n,
                              double h,
                              const struct MrnprkSolverConfig *cfg,
                              struct MrnprkStats *stats);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MRNPRK_H */

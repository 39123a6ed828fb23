#ifndef PAMRET_H
#define PAMRET_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum PamretStatus {
  PAMRET_STATUS_OK = 0,
  PAMRET_STATUS_NULL_POINTER = 1,
  PAMRET_STATUS_INVALID_ARGUMENT = 2,
  PAMRET_STATUS_DIMENSION_MISMATCH = 3,
  PAMRET_STATUS_MISSING_OBSERVATIONS = 4,
  PAMRET_STATUS_NONDIFFERENTIABLE = 5,
  PAMRET_STATUS_UNSUPPORTED = 6,
  PAMRET_STATUS_DIVERGED = 7,
  PAMRET_STATUS_PANIC = 8,
  PAMRET_STATUS_INTERNAL = 9,
} PamretStatus;

/**
 * Losses exposed for evaluation.
 */
typedef enum PamretLoss {
  PAMRET_LOSS_PAM1 = 0,
  PAMRET_LOSS_PAM2 = 1,
  PAMRET_LOSS_SAF = 2,
  PAMRET_LOSS_WF_INTENSITY = 3,
  PAMRET_LOSS_AMPLITUDE = 4,
} PamretLoss;

/**
 * Solvers with their default settings.
 */
typedef enum PamretMethod {
  PAMRET_METHOD_PAM1 = 0,
  PAMRET_METHOD_PAM2 = 1,
  PAMRET_METHOD_SAF = 2,
  PAMRET_METHOD_WF = 3,
  PAMRET_METHOD_TWF = 4,
  PAMRET_METHOD_TAF = 5,
} PamretMethod;

/**
 * Measurement ensemble with optional observations.
 */
typedef struct PamretEnsemble PamretEnsemble;

/**
 * Outcome of one solver run.
 */
typedef struct PamretResult PamretResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message on this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL, or
 * 0 when there is no error.
 *
 * # Safety
 * `buf` must be valid for `len` bytes or null.
 */
size_t pamret_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pamret_version(void);

/**
 * Real Gaussian ensemble with `m` vectors in dimension `n`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum PamretStatus pamret_ensemble_gaussian_real(size_t n,
                                                size_t m,
                                                uint64_t seed,
                                                struct PamretEnsemble **out);

/**
 * Complex Gaussian ensemble with `m` vectors in dimension `n`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum PamretStatus pamret_ensemble_gaussian_complex(size_t n,
                                                   size_t m,
                                                   uint64_t seed,
                                                   struct PamretEnsemble **out);

/**
 * Coded diffraction ensemble with `l` octanary masks.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum PamretStatus pamret_ensemble_cdp(size_t n,
                                      size_t l,
                                      uint64_t seed,
                                      struct PamretEnsemble **out);

/**
 * Releases an ensemble; null is ignored.
 *
 * # Safety
 * `ens` must come from a constructor above and not be used afterwards.
 */
void pamret_ensemble_free(struct PamretEnsemble *ens);

/**
 * Signal dimension and number of measurements.
 *
 * # Safety
 * `ens` must be a valid handle; `n` and `m` valid pointers or null.
 */
enum PamretStatus pamret_ensemble_dims(const struct PamretEnsemble *ens, size_t *n, size_t *m);

/**
 * Records the noiseless magnitudes of `x` (`len` coordinates).
 *
 * # Safety
 * `ens` must be a valid handle and `x` valid for `len` doubles.
 */
enum PamretStatus pamret_ensemble_observe(struct PamretEnsemble *ens, const double *x, size_t len);

/**
 * Replaces the observed magnitudes with `y` (length `m`).
 *
 * # Safety
 * `ens` must be a valid handle and `y` valid for `m` doubles.
 */
enum PamretStatus pamret_ensemble_set_observations(struct PamretEnsemble *ens,
                                                   const double *y,
                                                   size_t m);

/**
 * Loss value at `u`. `beta` is ignored by losses without a parameter.
 *
 * # Safety
 * `ens` must be a valid handle, `u` valid for `len` doubles, `out` valid.
 */
enum PamretStatus pamret_loss(const struct PamretEnsemble *ens,
                              enum PamretLoss model,
                              double beta,
                              const double *u,
                              size_t len,
                              double *out);

/**
 * Gradient at `u` written to `grad` (same layout and length as `u`). For
 * complex ensembles this is the conjugate (Wirtinger) derivative.
 *
 * # Safety
 * `ens` must be a valid handle; `u` and `grad` valid for `len` doubles.
 */
enum PamretStatus pamret_gradient(const struct PamretEnsemble *ens,
                                  enum PamretLoss model,
                                  double beta,
                                  const double *u,
                                  size_t len,
                                  double *grad);

/**
 * Runs `method` with its defaults. `mu <= 0` keeps the default step and
 * `beta <= 0` the default smoothing. `truth` (may be null) enables
 * relative-error reporting. A diverged run still produces a result and
 * returns `Diverged`.
 *
 * # Safety
 * `ens` must be a valid handle, `truth` null or valid for `truth_len`
 * doubles, `out` a valid pointer.
 */
enum PamretStatus pamret_solve(const struct PamretEnsemble *ens,
                               enum PamretMethod m,
                               size_t max_iters,
                               uint64_t seed,
                               double mu,
                               double beta,
                               const double *truth,
                               size_t truth_len,
                               struct PamretResult **out);

/**
 * Releases a result; null is ignored.
 *
 * # Safety
 * `res` must come from [`pamret_solve`] and not be used afterwards.
 */
void pamret_result_free(struct PamretResult *res);

/**
 * Iterations run; 0 for a null handle.
 *
 * # Safety
 * `res` must be a valid handle or null.
 */
size_t pamret_result_iterations(const struct PamretResult *res);

/**
 * Final relative error; NaN without a ground truth or for a null handle.
 *
 * # Safety
 * `res` must be a valid handle or null.
 */
double pamret_result_rel_error(const struct PamretResult *res);

/**
 * Final loss value; NaN for a null handle.
 *
 * # Safety
 * `res` must be a valid handle or null.
 */
double pamret_result_loss(const struct PamretResult *res);

/**
 * Copies the estimate into `buf` (`len` coordinates, as for inputs).
 *
 * # Safety
 * `res` must be a valid handle and `buf` valid for `len` doubles.
 */
enum PamretStatus pamret_result_estimate(const struct PamretResult *res, double *buf, size_t len);

/**
 * Population profile of the cross term for `model` in {Pam1, Pam2}.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum PamretStatus pamret_limiting_profile(enum PamretLoss model,
                                          double beta,
                                          double rho,
                                          double t,
                                          double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PAMRET_H */

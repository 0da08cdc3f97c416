#ifndef SUBLINEAR_H
#define SUBLINEAR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Status code returned by every entry point.
 */
typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_INVALID_ARGUMENT = 1,
  SL_STATUS_NULL_POINTER = 2,
  /**
   * A test function returned a non-finite value.
   */
  SL_STATUS_EVALUATION_FAILED = 3,
  /**
   * Not enough observations for the requested window configuration.
   */
  SL_STATUS_INSUFFICIENT_DATA = 4,
  /**
   * Malformed input data (bad JSON, non-finite samples, ...).
   */
  SL_STATUS_DATA_ERROR = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  SL_STATUS_INTERNAL = 6,
} SlStatus;

/**
 * Values for the `noise` argument of [`sl_second_moment_upper`] and
 * [`sl_rate_check_csv`].
 */
typedef enum SlNoise {
  SL_NOISE_NONE = 0,
  SL_NOISE_UNIFORM = 1,
  SL_NOISE_TWO_POINT = 2,
} SlNoise;

/**
 * Opaque envelope report.
 */
typedef struct SlEnvelope SlEnvelope;

/**
 * Opaque scenario family.
 */
typedef struct SlFamily SlFamily;

/**
 * Scalar test function: `f(x, user_data)`.
 */
typedef double (*SlScalarFn)(double x, void *user_data);

/**
 * Event predicate: nonzero means `x` belongs to the event.
 */
typedef int32_t (*SlPredicate)(double x, void *user_data);

typedef struct SlMaximalEval {
  double value;
  double argmax;
  double error_bound;
} SlMaximalEval;

typedef struct SlMleResult {
  double mu_lo_hat;
  double mu_hi_hat;
  double delta;
  size_t n;
} SlMleResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sl_version(void);

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next call into the library from the same thread.
 */
const char *sl_last_error(void);

/**
 * Releases a string returned by the library. NULL is ignored.
 */
void sl_string_free(char *s);

/**
 * Parses a family from JSON: an array of `{"atoms": [[point, weight], ...]}`.
 */
enum SlStatus sl_family_from_json(const char *json, struct SlFamily **out_family);

/**
 * Family of Dirac measures at `points`.
 */
enum SlStatus sl_family_diracs(const double *points, size_t len, struct SlFamily **out_family);

void sl_family_free(struct SlFamily *family);

enum SlStatus sl_family_len(const struct SlFamily *family, size_t *out_len);

/**
 * Upper expectation over the family; `out_index` (optional) receives the
 * index of the maximizing measure.
 */
enum SlStatus sl_family_expect(const struct SlFamily *family,
                               SlScalarFn f,
                               void *user_data,
                               double lipschitz,
                               double bound,
                               double *out_value,
                               size_t *out_index);

/**
 * Upper probability of the event described by `pred`.
 */
enum SlStatus sl_family_capacity(const struct SlFamily *family,
                                 SlPredicate pred,
                                 void *user_data,
                                 double *out_value);

/**
 * E^[f(X)] for X maximal on `[mu_lo, mu_hi]`, by grid search with the
 * given step (plus local refinement when `refine` is nonzero).
 */
enum SlStatus sl_maximal_eval(double mu_lo,
                              double mu_hi,
                              SlScalarFn f,
                              void *user_data,
                              double lipschitz,
                              double bound,
                              double step,
                              int32_t refine,
                              struct SlMaximalEval *out_eval);

/**
 * Distance from `x` to `[mu_lo, mu_hi]`.
 */
enum SlStatus sl_interval_distance(double mu_lo, double mu_hi, double x, double *out_value);

/**
 * Sample minimum and maximum.
 */
enum SlStatus sl_mle_estimate(const double *values, size_t len, struct SlMleResult *out_result);

/**
 * 1 if every sample lies in `[mu_lo, mu_hi]`, else 0.
 */
enum SlStatus sl_likelihood(const double *values,
                            size_t len,
                            double mu_lo,
                            double mu_hi,
                            uint8_t *out_value);

/**
 * Upper second moment E^[X_1^2] of the mean interval plus noise.
 */
enum SlStatus sl_second_moment_upper(double mu_lo,
                                     double mu_hi,
                                     int32_t noise,
                                     double half_width,
                                     double *out_value);

/**
 * Convergence-rate table as CSV text (header line included), using constant
 * policies at both endpoints and the midpoint and the alternating policy.
 * Release the string with [`sl_string_free`].
 */
enum SlStatus sl_rate_check_csv(double mu_lo,
                                double mu_hi,
                                int32_t noise,
                                double half_width,
                                size_t n_max,
                                size_t reps,
                                uint64_t seed,
                                char **out_csv);

/**
 * Rolling-window variance envelope at forecast index `t_index`; pass a
 * negative `t_index` to use the series length.
 */
enum SlStatus sl_envelope_compute(const double *values,
                                  size_t len,
                                  size_t window,
                                  size_t num_windows,
                                  int32_t demean,
                                  int64_t t_index,
                                  struct SlEnvelope **out_envelope);

void sl_envelope_free(struct SlEnvelope *envelope);

enum SlStatus sl_envelope_bounds(const struct SlEnvelope *envelope,
                                 double *out_sigma_lo_sq,
                                 double *out_sigma_hi_sq);

/**
 * Number of windows in the report.
 */
enum SlStatus sl_envelope_len(const struct SlEnvelope *envelope, size_t *out_len);

/**
 * Lag `j` and local variance of the `i`-th window (0-based).
 */
enum SlStatus sl_envelope_window(const struct SlEnvelope *envelope,
                                 size_t i,
                                 size_t *out_j,
                                 double *out_sigma_sq);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUBLINEAR_H */

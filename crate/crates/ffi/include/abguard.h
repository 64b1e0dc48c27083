#ifndef ABGUARD_H
#define ABGUARD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AbgStatus {
  ABG_STATUS_OK = 0,
  ABG_STATUS_NULL_POINTER = 1,
  ABG_STATUS_DOMAIN = 2,
  ABG_STATUS_SHAPE = 3,
  ABG_STATUS_SEQUENCING = 4,
  ABG_STATUS_SPEC = 5,
  ABG_STATUS_VALIDATION = 6,
  ABG_STATUS_INVALID_UTF8 = 7,
  ABG_STATUS_INTERNAL = 99,
} AbgStatus;

typedef enum AbgMethod {
  ABG_METHOD_PSI_K = 0,
  ABG_METHOD_PEARSON_CHI2 = 1,
  ABG_METHOD_KS = 2,
  ABG_METHOD_AD = 3,
} AbgMethod;

typedef enum AbgVariant {
  ABG_VARIANT_GAUSSIAN = 0,
  ABG_VARIANT_EXACT = 1,
} AbgVariant;

typedef enum AbgOutcome {
  ABG_OUTCOME_CONTINUE = 0,
  ABG_OUTCOME_ALERT_HIGH = 1,
  ABG_OUTCOME_ALERT_LOW = 2,
  ABG_OUTCOME_ACCEPT_NULL = 3,
  ABG_OUTCOME_NOT_EVALUATED = 4,
  ABG_OUTCOME_ALREADY_FIRED = 5,
} AbgOutcome;

typedef enum AbgDirection {
  ABG_DIRECTION_NONE = 0,
  ABG_DIRECTION_HIGH = 1,
  ABG_DIRECTION_LOW = 2,
} AbgDirection;

/**
 * Sequential SRM monitor for one experiment.
 */
typedef struct AbgMonitor AbgMonitor;

typedef struct AbgValidation {
  double statistic;
  /**
   * NaN when the test has no critical value or was not evaluated.
   */
  double threshold;
  /**
   * NaN when not evaluated.
   */
  double p_value;
  bool alert;
  /**
   * False when the total is below the minimum sample size.
   */
  bool evaluated;
  bool conservative_for_discrete;
  uint64_t total;
} AbgValidation;

typedef struct AbgDecision {
  uint32_t day;
  /**
   * NaN when not evaluated.
   */
  double t_a;
  double t_b;
  double upper_threshold;
  /**
   * `-inf` when beta is 0.
   */
  double lower_threshold;
  enum AbgOutcome outcome;
} AbgDecision;

typedef struct AbgMonitorState {
  bool fired;
  bool has_first_alert_day;
  uint32_t first_alert_day;
  enum AbgDirection direction;
  bool has_last_day;
  uint32_t last_day;
} AbgMonitorState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next `abg_*` call on the same thread.
 */
const char *abg_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *abg_version(void);

/**
 * # Safety
 * `out` must be valid for writing one `double`.
 */
enum AbgStatus abg_chi_square_cdf(double x, uint32_t df, double *out);

/**
 * # Safety
 * `out` must be valid for writing one `double`.
 */
enum AbgStatus abg_chi_square_sf(double x, uint32_t df, double *out);

/**
 * Lower-tail quantile: the `x` with `cdf(x) = p`.
 *
 * # Safety
 * `out` must be valid for writing one `double`.
 */
enum AbgStatus abg_chi_square_quantile(double p, uint32_t df, double *out);

/**
 * Upper-tail critical value: the `x` with `sf(x) = alpha`.
 *
 * # Safety
 * `out` must be valid for writing one `double`.
 */
enum AbgStatus abg_chi_square_critical(double alpha, uint32_t df, double *out);

/**
 * Bucket of `user_id` on the plane keyed by `seed`.
 *
 * # Safety
 * `user_id` and `seed` must be NUL-terminated strings; `out` must be valid
 * for writing one `uint32_t`.
 */
enum AbgStatus abg_assign_bucket(const char *user_id,
                                 const char *seed,
                                 uint32_t buckets,
                                 uint32_t *out);

/**
 * Uniformity test of `len` bucket counts. `k` is used by `ABG_METHOD_PSI_K` only.
 *
 * # Safety
 * `counts` must point to `len` readable `uint64_t`; `out` must be valid for
 * writing one `AbgValidation`.
 */
enum AbgStatus abg_validate_uniform(const uint64_t *counts,
                                    size_t len,
                                    enum AbgMethod method,
                                    double alpha,
                                    uint32_t k,
                                    struct AbgValidation *out);

/**
 * Create a monitor. `delta <= 0` selects the default tolerance.
 *
 * # Safety
 * `out` must be valid for writing one pointer. The handle must be released
 * with [`abg_monitor_free`].
 */
enum AbgStatus abg_monitor_new(double r_t,
                               double r_c,
                               enum AbgVariant variant,
                               double alpha,
                               double beta,
                               double delta,
                               uint64_t min_total,
                               struct AbgMonitor **out);

/**
 * Fold one cumulative snapshot into the monitor. Days must strictly increase.
 *
 * # Safety
 * `monitor` must come from [`abg_monitor_new`] and not be freed; `out` must
 * be valid for writing one `AbgDecision`.
 */
enum AbgStatus abg_monitor_step(struct AbgMonitor *monitor,
                                uint32_t day,
                                uint64_t x_t,
                                uint64_t x_c,
                                struct AbgDecision *out);

/**
 * # Safety
 * `monitor` must come from [`abg_monitor_new`] and not be freed; `out` must
 * be valid for writing one `AbgMonitorState`.
 */
enum AbgStatus abg_monitor_state(const struct AbgMonitor *monitor, struct AbgMonitorState *out);

/**
 * Release a monitor. Null is ignored.
 *
 * # Safety
 * `monitor` must come from [`abg_monitor_new`] and not already be freed.
 */
void abg_monitor_free(struct AbgMonitor *monitor);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ABGUARD_H */

#ifndef TWOSIDED_OU_H
#define TWOSIDED_OU_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible call.
 */
typedef enum TsouStatus {
  TSOU_STATUS_OK = 0,
  TSOU_STATUS_NULL_POINTER = 1,
  TSOU_STATUS_INVALID_ARGUMENT = 2,
  TSOU_STATUS_COEFFICIENT_OUT_OF_RANGE = 3,
  TSOU_STATUS_INVALID_STEP = 4,
  TSOU_STATUS_NOT_GRID_ALIGNED = 5,
  TSOU_STATUS_WINDOW_EXHAUSTED = 6,
  TSOU_STATUS_GRID_MISMATCH = 7,
  TSOU_STATUS_TOL_UNREACHABLE = 8,
  TSOU_STATUS_ENVELOPE_UNAVAILABLE = 9,
  TSOU_STATUS_DECAY_FIT = 10,
  TSOU_STATUS_INFEASIBLE_BUDGET = 11,
  TSOU_STATUS_INTERNAL = 12,
  TSOU_STATUS_BUFFER_TOO_SMALL = 13,
  TSOU_STATUS_PANIC = 14,
} TsouStatus;

typedef enum TsouKind {
  TSOU_KIND_DELAY = 0,
  TSOU_KIND_ANTICIPATION = 1,
} TsouKind;

/**
 * Series stored in a realization, all on the output window.
 */
typedef enum TsouSeries {
  TSOU_SERIES_TIME = 0,
  TSOU_SERIES_W = 1,
  TSOU_SERIES_X = 2,
  /**
   * `X - W`.
   */
  TSOU_SERIES_A = 3,
} TsouSeries;

/**
 * Opaque fundamental solution.
 */
typedef struct TsouFundamental TsouFundamental;

/**
 * Opaque process realization.
 */
typedef struct TsouRealization TsouRealization;

/**
 * Settings of [`tsou_simulate`]; start from [`tsou_sim_config_default`].
 */
typedef struct TsouSimConfig {
  double a;
  double dt;
  double tol;
  size_t k_f;
  double t_left;
  double t_right;
  double mean;
  double stddev;
  uint64_t seed;
  enum TsouKind kind;
} TsouSimConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *tsou_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length without
 * the terminator, 0 when there is none.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t tsou_last_error_message(char *buf, size_t len);

/**
 * Builds the fundamental solution for `a` in (-1, 0) on `[0, max_interval]`.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum TsouStatus tsou_fundamental_new(double a, size_t max_interval, struct TsouFundamental **out);

/**
 * `r(s)`; zero for `s < 0`.
 *
 * # Safety
 * `h` must come from [`tsou_fundamental_new`]; `out` must be valid for a write.
 */
enum TsouStatus tsou_fundamental_eval(const struct TsouFundamental *h, double s, double *out);

/**
 * Fitted decay envelope `|r(s)| <= c exp(-lambda s)`.
 *
 * # Safety
 * `h` must come from [`tsou_fundamental_new`]; `lambda` and `c` must be valid for writes.
 */
enum TsouStatus tsou_fundamental_decay(const struct TsouFundamental *h, double *lambda, double *c);

/**
 * # Safety
 * `h` must be null or come from [`tsou_fundamental_new`], and not be used afterwards.
 */
void tsou_fundamental_free(struct TsouFundamental *h);

/**
 * Defaults matching the command-line tool.
 */
struct TsouSimConfig tsou_sim_config_default(void);

/**
 * Samples a driver and assembles one realization on `[t_left, t_right]`.
 *
 * # Safety
 * `cfg` must be valid for a read and `out` for a write.
 */
enum TsouStatus tsou_simulate(const struct TsouSimConfig *cfg, struct TsouRealization **out);

/**
 * Number of grid points on the output window.
 *
 * # Safety
 * `h` must come from [`tsou_simulate`]; `out` must be valid for a write.
 */
enum TsouStatus tsou_realization_len(const struct TsouRealization *h, size_t *out);

/**
 * The constant `b0` of the realization.
 *
 * # Safety
 * `h` must come from [`tsou_simulate`]; `out` must be valid for a write.
 */
enum TsouStatus tsou_realization_b0(const struct TsouRealization *h, double *out);

/**
 * Anchored residual of the process equation; NaN when the window is
 * shorter than one unit.
 *
 * # Safety
 * `h` must come from [`tsou_simulate`]; `out` must be valid for a write.
 */
enum TsouStatus tsou_realization_residual(const struct TsouRealization *h, double *out);

/**
 * Copies one series into `buf`, which must hold at least
 * [`tsou_realization_len`] values.
 *
 * # Safety
 * `h` must come from [`tsou_simulate`]; `buf` must be valid for `len` writes.
 */
enum TsouStatus tsou_realization_copy(const struct TsouRealization *h,
                                      enum TsouSeries series,
                                      double *buf,
                                      size_t len);

/**
 * # Safety
 * `h` must be null or come from [`tsou_simulate`], and not be used afterwards.
 */
void tsou_realization_free(struct TsouRealization *h);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TWOSIDED_OU_H */

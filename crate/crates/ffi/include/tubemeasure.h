#ifndef TUBEMEASURE_H
#define TUBEMEASURE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum TmStatus {
  TM_STATUS_OK = 0,
  TM_STATUS_NULL_POINTER = 1,
  TM_STATUS_INVALID_ARGUMENT = 2,
  TM_STATUS_DIMENSION_MISMATCH = 3,
  TM_STATUS_EMPTY_CLOUD = 4,
  /**
   * Ill-conditioned radii, exhausted sampler or transport failure.
   */
  TM_STATUS_NUMERICAL = 5,
  TM_STATUS_PARSE = 6,
  TM_STATUS_IO = 7,
  TM_STATUS_PANIC = 8,
} TmStatus;

/**
 * A point cloud.
 */
typedef struct TmCloud TmCloud;

/**
 * A boundary-measure estimate with its sampling metadata.
 */
typedef struct TmEstimate TmEstimate;

/**
 * A finite (possibly signed) discrete measure.
 */
typedef struct TmMeasure TmMeasure;

/**
 * Curvature measures, one per index `0..=dim`.
 */
typedef struct TmProfile TmProfile;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` as a
 * NUL-terminated string, truncating to `len - 1` bytes. Returns the full
 * message length without the terminator; pass `buf = NULL` to query it.
 */
size_t tm_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tm_version(void);

/**
 * Builds a cloud from `count` points of dimension `dim`, stored row-major.
 */
enum TmStatus tm_cloud_new(size_t dim, const double *coords, size_t count, struct TmCloud **out);

/**
 * Reads a point file (one point per line, comma or whitespace separated).
 */
enum TmStatus tm_cloud_read(const char *path, struct TmCloud **out);

void tm_cloud_free(struct TmCloud *cloud);

/**
 * Dimension of the cloud, 0 for NULL.
 */
size_t tm_cloud_dim(const struct TmCloud *cloud);

/**
 * Number of points, 0 for NULL.
 */
size_t tm_cloud_len(const struct TmCloud *cloud);

/**
 * Samples needed so the estimate is within `eps` in the bounded-Lipschitz
 * distance with probability at least `1 - delta`, given a covering number.
 */
enum TmStatus tm_required_sample_count(size_t covering, double eps, double delta, uint64_t *out);

/**
 * Estimates the boundary measure of `cloud` at offset radius `r` from
 * `samples` uniform points of the offset. Results depend only on `seed`, not
 * on `workers`.
 */
enum TmStatus tm_boundary_estimate(const struct TmCloud *cloud,
                                   double r,
                                   uint64_t samples,
                                   uint64_t seed,
                                   size_t workers,
                                   struct TmEstimate **out);

void tm_estimate_free(struct TmEstimate *est);

/**
 * Offset volume estimate and its standard error.
 */
enum TmStatus tm_estimate_offset_volume(const struct TmEstimate *est,
                                        double *volume,
                                        double *stderr);

/**
 * Per-point sample counts, copied into `counts` (length `tm_cloud_len`).
 */
enum TmStatus tm_estimate_counts(const struct TmEstimate *est, uint64_t *counts, size_t len);

/**
 * The boundary measure, scaled by the offset volume.
 */
enum TmStatus tm_estimate_measure(const struct TmEstimate *est, struct TmMeasure **out);

/**
 * The normalized (probability) boundary measure.
 */
enum TmStatus tm_estimate_probability(const struct TmEstimate *est, struct TmMeasure **out);

/**
 * Builds a nonnegative measure from `count` atoms.
 */
enum TmStatus tm_measure_new(size_t dim,
                             const double *locations,
                             const double *weights,
                             size_t count,
                             struct TmMeasure **out);

void tm_measure_free(struct TmMeasure *m);

/**
 * Number of atoms, 0 for NULL.
 */
size_t tm_measure_len(const struct TmMeasure *m);

/**
 * Dimension, 0 for NULL.
 */
size_t tm_measure_dim(const struct TmMeasure *m);

/**
 * Sum of the weights, NaN for NULL.
 */
double tm_measure_total_mass(const struct TmMeasure *m);

/**
 * Copies the atoms out: `locations` holds `len * dim` values row-major and
 * `weights` holds `len`, where `len` must equal `tm_measure_len`.
 */
enum TmStatus tm_measure_atoms(const struct TmMeasure *m,
                               double *locations,
                               double *weights,
                               size_t len);

/**
 * Exact bounded-Lipschitz distance between two measures.
 */
enum TmStatus tm_bl_distance(const struct TmMeasure *a, const struct TmMeasure *b, double *out);

/**
 * Exact 1-Wasserstein distance between two measures of equal mass.
 */
enum TmStatus tm_w1_distance(const struct TmMeasure *a, const struct TmMeasure *b, double *out);

/**
 * Curvature measures of `cloud` from boundary measures at the given
 * increasing radii (`dim + 1` of them), or at a geometric schedule from
 * `r0` to `4 r0` when `radii` is NULL.
 */
enum TmStatus tm_curvature(const struct TmCloud *cloud,
                           const double *radii,
                           size_t radii_len,
                           double r0,
                           uint64_t samples_per_radius,
                           uint64_t seed,
                           size_t workers,
                           struct TmProfile **out);

void tm_profile_free(struct TmProfile *p);

/**
 * Number of curvature measures (`dim + 1`), 0 for NULL.
 */
size_t tm_profile_count(const struct TmProfile *p);

/**
 * 1-norm condition number of the solved system, NaN for NULL.
 */
double tm_profile_condition(const struct TmProfile *p);

/**
 * A copy of curvature measure `index` (signed in general).
 */
enum TmStatus tm_profile_measure(const struct TmProfile *p, size_t index, struct TmMeasure **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TUBEMEASURE_H */

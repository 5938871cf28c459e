#ifndef HOTSPOT_H
#define HOTSPOT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

// Grade code returned by [`hotspot_assign_grade`] for points outside every polygon.
#define HOTSPOT_UNGRADED -1

// Cluster label written for noise points.
#define HOTSPOT_NOISE -1

#define HOTSPOT_ROLE_CORE 0

#define HOTSPOT_ROLE_BORDER 1

#define HOTSPOT_ROLE_NOISE 2

typedef enum HotspotStatus {
    HOTSPOT_STATUS_OK = 0,
    HOTSPOT_STATUS_NULL_POINTER = 1,
    HOTSPOT_STATUS_INVALID_ARGUMENT = 2,
    HOTSPOT_STATUS_TOO_FEW_POINTS = 3,
    HOTSPOT_STATUS_BUFFER_TOO_SMALL = 4,
    HOTSPOT_STATUS_IO = 5,
    HOTSPOT_STATUS_PARSE = 6,
    HOTSPOT_STATUS_NO_CLUSTERS = 7,
    HOTSPOT_STATUS_DEGENERATE_TABLE = 8,
    HOTSPOT_STATUS_PANIC = 99,
} HotspotStatus;

// Opaque HOLC polygon layer.
typedef struct HotspotHolcLayer HotspotHolcLayer;

// Opaque set of (lat, lon) points.
typedef struct HotspotPoints HotspotPoints;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the calling thread's last error message into `buf` (NUL-terminated,
// truncated to fit). Returns the full message length excluding the NUL.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t hotspot_last_error_message(char *buf, size_t len);

// Build a point set from parallel latitude and longitude arrays.
//
// # Safety
// `lat` and `lon` must each point to `n` readable doubles (or be null when
// `n` is 0); `out_points` must be a valid pointer.
enum HotspotStatus hotspot_points_new(const double *lat,
                                      const double *lon,
                                      size_t n,
                                      struct HotspotPoints **out_points);

// # Safety
// `points` must be null or a handle from [`hotspot_points_new`] not yet freed.
void hotspot_points_free(struct HotspotPoints *points);

// Number of points in the set; 0 for a null handle.
//
// # Safety
// `points` must be null or a live handle.
size_t hotspot_points_len(const struct HotspotPoints *points);

// Radius at the knee of the sorted k-distance curve.
//
// # Safety
// `points` must be a live handle and `out_eps` a valid pointer.
enum HotspotStatus hotspot_select_epsilon(const struct HotspotPoints *points,
                                          size_t k,
                                          double *out_eps);

// DBSCAN. Writes one cluster label (or `HOTSPOT_NOISE`) and one role code
// per point; `len` must be at least the number of points. `roles` may be null.
//
// # Safety
// `labels` must point to `len` writable `int64_t`, `roles` (if not null) to
// `len` writable bytes.
enum HotspotStatus hotspot_dbscan(const struct HotspotPoints *points,
                                  double eps,
                                  size_t min_pts,
                                  int64_t *labels,
                                  uint8_t *roles,
                                  size_t len,
                                  size_t *out_n_clusters);

// Trial-averaged Hopkins statistic. `sample_size` 0 picks the default.
//
// # Safety
// `points` must be a live handle; `out_mean` must be valid; `out_std` may be null.
enum HotspotStatus hotspot_hopkins(const struct HotspotPoints *points,
                                   size_t sample_size,
                                   size_t trials,
                                   uint64_t seed,
                                   double *out_mean,
                                   double *out_std);

// Average-of-minimum-distances between two non-empty point sets, summed
// over both directions.
//
// # Safety
// `a` and `b` must be live handles and `out_distance` valid.
enum HotspotStatus hotspot_set_distance(const struct HotspotPoints *a,
                                        const struct HotspotPoints *b,
                                        double *out_distance);

// Non-systemic index over yearly representative sets, given in year order.
// Empty sets are skipped; at least two must be non-empty.
//
// # Safety
// `sets` must point to `n_sets` live handles.
enum HotspotStatus hotspot_nsi(const struct HotspotPoints *const *sets,
                               size_t n_sets,
                               double *out_nsi);

// Upper tail of the chi-square distribution. NaN when `df` is 0 or `x` is NaN.
double hotspot_chi_square_sf(double x, uint32_t df);

// Pearson chi-square test on a row-major `rows x cols` count table.
// All-zero rows and columns are dropped before computing degrees of freedom.
//
// # Safety
// `counts` must point to `rows * cols` readable values; outputs must be valid
// (`out_df` may be null).
enum HotspotStatus hotspot_chi_square(const uint64_t *counts,
                                      size_t rows,
                                      size_t cols,
                                      double *out_statistic,
                                      uint32_t *out_df,
                                      double *out_p_value);

// Load a HOLC GeoJSON FeatureCollection; `grade_property` names the
// feature property holding A, B, C or D.
//
// # Safety
// `path` and `grade_property` must be NUL-terminated strings; `out_layer` valid.
enum HotspotStatus hotspot_holc_layer_load(const char *path,
                                           const char *grade_property,
                                           struct HotspotHolcLayer **out_layer);

// # Safety
// `layer` must be null or a handle from [`hotspot_holc_layer_load`] not yet freed.
void hotspot_holc_layer_free(struct HotspotHolcLayer *layer);

// Grade of the first polygon containing the point: 0..=3 for A..D, or
// `HOTSPOT_UNGRADED`.
//
// # Safety
// `layer` must be a live handle and `out_grade` valid.
enum HotspotStatus hotspot_assign_grade(const struct HotspotHolcLayer *layer,
                                        double lat,
                                        double lon,
                                        int32_t *out_grade);

// Library version as a static NUL-terminated string.
const char *hotspot_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HOTSPOT_H */

#ifndef CROWDSEG_H
#define CROWDSEG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CsStatus {
  CS_STATUS_OK = 0,
  CS_STATUS_NULL_POINTER = 1,
  CS_STATUS_INVALID_ARGUMENT = 2,
  CS_STATUS_CONFIG = 3,
  CS_STATUS_IO = 4,
  CS_STATUS_FORMAT = 5,
  CS_STATUS_NUMERIC = 6,
  CS_STATUS_PANIC = 7,
} CsStatus;

typedef struct CsFlowField CsFlowField;

typedef struct CsLabelMap CsLabelMap;

typedef struct CsScalarField CsScalarField;

/**
 * Pipeline parameters; start from [`cs_params_default`].
 */
typedef struct CsParams {
  double flow_smoothness;
  uint32_t flow_iterations;
  double advect_duration;
  double advect_step;
  double advect_grid_step;
  double ftle_sigma;
  uint32_t ftle_margin;
  uint32_t seg_min_area;
  double seg_vacuum_threshold;
  double seg_merge_angle_deg;
  uint32_t seg_merge_band;
} CsParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL. Valid
 * until the next call into this library from the same thread.
 */
const char *cs_last_error(void);

struct CsParams cs_params_default(void);

/**
 * Copies `width * height` row-major components from `u` and `v`.
 *
 * # Safety
 * `u` and `v` must each point to `width * height` readable doubles and
 * `out` to writable storage for one pointer.
 */
enum CsStatus cs_flow_field_new(size_t width,
                                size_t height,
                                const double *u,
                                const double *v,
                                struct CsFlowField **out);

/**
 * Reads a Middlebury `.flo` file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum CsStatus cs_flow_field_read_flo(const char *path, struct CsFlowField **out);

/**
 * # Safety
 * `field` must be a live handle or NULL.
 */
size_t cs_flow_field_width(const struct CsFlowField *field);

/**
 * # Safety
 * `field` must be a live handle or NULL.
 */
size_t cs_flow_field_height(const struct CsFlowField *field);

/**
 * # Safety
 * `field` must come from this library and not be used afterwards.
 */
void cs_flow_field_free(struct CsFlowField *field);

/**
 * Combined, boundary-stripped and smoothed FTLE of a steady flow.
 *
 * # Safety
 * `flow` and `params` must be valid; `out` must be writable.
 */
enum CsStatus cs_compute_ftle(const struct CsFlowField *flow,
                              const struct CsParams *params,
                              struct CsScalarField **out);

/**
 * # Safety
 * `field` must be a live handle or NULL.
 */
size_t cs_scalar_field_cols(const struct CsScalarField *field);

/**
 * # Safety
 * `field` must be a live handle or NULL.
 */
size_t cs_scalar_field_rows(const struct CsScalarField *field);

/**
 * Copies the row-major values into `buf`, which holds `len` doubles.
 *
 * # Safety
 * `field` must be valid and `buf` must point to `len` writable doubles.
 */
enum CsStatus cs_scalar_field_copy(const struct CsScalarField *field, double *buf, size_t len);

/**
 * # Safety
 * `field` must come from this library and not be used afterwards.
 */
void cs_scalar_field_free(struct CsScalarField *field);

/**
 * Full segmentation of a steady flow: advection, FTLE, watershed and
 * post-processing. Labels are on the FTLE grid.
 *
 * # Safety
 * `flow` and `params` must be valid; `out` must be writable.
 */
enum CsStatus cs_segment_flow(const struct CsFlowField *flow,
                              const struct CsParams *params,
                              struct CsLabelMap **out);

/**
 * Watershed and post-processing of a given height field, with `flow`
 * covering the field's offset region.
 *
 * # Safety
 * All handles and `params` must be valid; `out` must be writable.
 */
enum CsStatus cs_segment_height(const struct CsScalarField *height,
                                const struct CsFlowField *flow,
                                const struct CsParams *params,
                                struct CsLabelMap **out);

/**
 * # Safety
 * `map` must be a live handle or NULL.
 */
size_t cs_label_map_cols(const struct CsLabelMap *map);

/**
 * # Safety
 * `map` must be a live handle or NULL.
 */
size_t cs_label_map_rows(const struct CsLabelMap *map);

/**
 * Number of segments.
 *
 * # Safety
 * `map` must be a live handle or NULL.
 */
uint32_t cs_label_map_count(const struct CsLabelMap *map);

/**
 * Position of the map's first cell on the particle grid.
 *
 * # Safety
 * `map` must be valid; `col` and `row` must be writable.
 */
enum CsStatus cs_label_map_offset(const struct CsLabelMap *map, size_t *col, size_t *row);

/**
 * Copies the row-major labels into `buf`, which holds `len` values.
 *
 * # Safety
 * `map` must be valid and `buf` must point to `len` writable values.
 */
enum CsStatus cs_label_map_copy(const struct CsLabelMap *map, uint32_t *buf, size_t len);

/**
 * # Safety
 * `map` must come from this library and not be used afterwards.
 */
void cs_label_map_free(struct CsLabelMap *map);

/**
 * Runs the whole pipeline on a directory of frames and writes every
 * artefact to `out_dir`. `segments`, if not NULL, receives the count.
 *
 * # Safety
 * Paths must be NUL-terminated strings; `params` must be valid.
 */
enum CsStatus cs_run_pipeline(const char *frames_dir,
                              const char *out_dir,
                              const struct CsParams *params,
                              uint32_t *segments);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CROWDSEG_H */

#ifndef SPACETIMEHAP_H
#define SPACETIMEHAP_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum StHapClass {
  ST_HAP_CLASS_TIMELIKE_FUTURE = 0,
  ST_HAP_CLASS_TIMELIKE_PAST = 1,
  ST_HAP_CLASS_SPACELIKE = 2,
  ST_HAP_CLASS_HAPLIKE = 3,
} StHapClass;

typedef enum StHapStatus {
  ST_HAP_STATUS_OK = 0,
  ST_HAP_STATUS_NULL_POINTER = 1,
  ST_HAP_STATUS_INVALID_ARGUMENT = 2,
  ST_HAP_STATUS_INVALID_FRAME = 3,
  ST_HAP_STATUS_DIMENSION_MISMATCH = 4,
  ST_HAP_STATUS_NON_FINITE = 5,
  ST_HAP_STATUS_OUT_OF_DOMAIN = 6,
  ST_HAP_STATUS_BOUNDARY_CONTAMINATION = 7,
  ST_HAP_STATUS_TIME_OUT_OF_RANGE = 8,
  ST_HAP_STATUS_NO_ROOT = 9,
  ST_HAP_STATUS_AMBIGUOUS_ROOT = 10,
  ST_HAP_STATUS_NO_CONVERGENCE = 11,
  ST_HAP_STATUS_INCONCLUSIVE = 12,
  ST_HAP_STATUS_CONFIG = 13,
  ST_HAP_STATUS_IO = 14,
  ST_HAP_STATUS_BUFFER_TOO_SMALL = 15,
  ST_HAP_STATUS_PANIC = 99,
} StHapStatus;

// Guiding flow built from a JSON run configuration.
typedef struct StHapFlow StHapFlow;

// Reduced causal graph of a set of events.
typedef struct StHapGraph StHapGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *sthap_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *sthap_version(void);

// Frees a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void sthap_string_free(char *s);

// Squared Minkowski norm `t^2 - |x|^2`.
//
// # Safety
// `x` must point to `dim` values and `out` to one.
enum StHapStatus sthap_interval(double t, const double *x, size_t dim, double *out);

// Boosts `(t, x)` into the frame moving with velocity `v`.
//
// # Safety
// `v`, `x` and `out_x` must point to `dim` values and `out_t` to one.
enum StHapStatus sthap_boost(const double *v,
                             size_t dim,
                             double t,
                             const double *x,
                             double *out_t,
                             double *out_x);

// Separation class of two spacetimehap events.
//
// # Safety
// `x1`, `x2` must point to `dim` values, `c1`, `c2` to `dim * particles`
// values and `out` to one class.
enum StHapStatus sthap_classify(double t1,
                                const double *x1,
                                const double *c1,
                                double t2,
                                const double *x2,
                                const double *c2,
                                size_t dim,
                                size_t particles,
                                enum StHapClass *out);

// Builds a flow from a run configuration with `grid`, `state`, and
// optionally `engine` and `potential`.
//
// # Safety
// `json` must be a NUL-terminated string and `out` writable.
enum StHapStatus sthap_flow_from_json(const char *json, struct StHapFlow **out);

// # Safety
// `flow` must come from [`sthap_flow_from_json`] and not be used afterwards.
void sthap_flow_free(struct StHapFlow *flow);

// Number of hap coordinates, or 0 for a null handle.
//
// # Safety
// `flow` must be null or a live handle.
size_t sthap_flow_hap_dim(const struct StHapFlow *flow);

// Guiding velocity at `point` and time `t`.
//
// # Safety
// `point` and `out` must point to `len` values.
enum StHapStatus sthap_flow_velocity(const struct StHapFlow *flow,
                                     double t,
                                     const double *point,
                                     size_t len,
                                     double *out);

// Transports `start` from `t0` to `t1` along the flow.
//
// # Safety
// `start` and `out_end` must point to `len` values.
enum StHapStatus sthap_flow_integrate(const struct StHapFlow *flow,
                                      const double *start,
                                      size_t len,
                                      double t0,
                                      double t1,
                                      double *out_end);

// Coordinates `(u, y, d)` of the event `(t, x, c)` for an observer moving
// with velocity `v` whose hap coordinate follows the flow.
//
// # Safety
// `v`, `x` and `out_y` must point to `dim` values; `c` and `out_d` to the
// flow's hap dimension; `out_u` to one value.
enum StHapStatus sthap_change_coordinates(const struct StHapFlow *flow,
                                          const double *v,
                                          size_t dim,
                                          double t,
                                          const double *x,
                                          const double *c,
                                          double *out_u,
                                          double *out_y,
                                          double *out_d);

// Builds the reduced causal graph of the events in a JSON array of
// `{"t": .., "x": [..], "c": [[..], ..]}` objects.
//
// # Safety
// `json` must be a NUL-terminated string and `out` writable.
enum StHapStatus sthap_graph_from_events_json(const char *json, struct StHapGraph **out);

// # Safety
// `graph` must come from [`sthap_graph_from_events_json`] and not be used
// afterwards.
void sthap_graph_free(struct StHapGraph *graph);

// Number of edges, or 0 for a null handle.
//
// # Safety
// `graph` must be null or a live handle.
size_t sthap_graph_edge_count(const struct StHapGraph *graph);

// Copies the sorted edges as `(src, dst)` pairs into `out`, which holds
// `capacity` pairs (`2 * capacity` values).
//
// # Safety
// `out` must point to `2 * capacity` writable values.
enum StHapStatus sthap_graph_edges(const struct StHapGraph *graph, size_t *out, size_t capacity);

// Graphviz rendering; free the result with [`sthap_string_free`].
//
// # Safety
// `graph` must be a live handle and `out` writable.
enum StHapStatus sthap_graph_to_dot(const struct StHapGraph *graph, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPACETIMEHAP_H */

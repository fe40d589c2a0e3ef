#ifndef MAGFLOW_H
#define MAGFLOW_H

/* Generated from the Rust sources by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. Zero is success.
typedef enum MagflowStatus {
  MAGFLOW_STATUS_OK = 0,
  MAGFLOW_STATUS_NULL_POINTER = 1,
  MAGFLOW_STATUS_INVALID_ARGUMENT = 2,
  MAGFLOW_STATUS_CONFIG_ERROR = 3,
  MAGFLOW_STATUS_CHECK_FAILED = 4,
  MAGFLOW_STATUS_NUMERICAL_ERROR = 5,
  MAGFLOW_STATUS_UNDEFINED = 6,
  MAGFLOW_STATUS_BUFFER_TOO_SMALL = 7,
  MAGFLOW_STATUS_PANIC = 8,
} MagflowStatus;

// A surface with its conformal metric, magnetic field and run parameters.
typedef struct MagflowModel MagflowModel;

typedef struct MagflowHelicity {
  double area;
  double flux;
  double formula;
  double integral;
  // Infinite when the total flux vanishes.
  double s_h;
} MagflowHelicity;

typedef struct MagflowCriticalEstimate {
  // Bounds on the critical value `c`.
  double lower;
  double upper;
  // Bounds on `s_c = 1/√(2c)`; infinite when the matching end of `c` is zero.
  double s_c_lower;
  double s_c_upper;
} MagflowCriticalEstimate;

typedef struct MagflowState {
  double x;
  double y;
  double theta;
} MagflowState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or an empty string. The pointer
// stays valid until the next magflow call on the same thread.
const char *magflow_last_error(void);

// Library version as a static NUL-terminated string.
const char *magflow_version(void);

// Curvature −1 metric with the uniform field `a` and default run parameters.
//
// # Safety
// `out` must be valid for writing a pointer.
enum MagflowStatus magflow_model_new(double a, struct MagflowModel **out);

// Model from a JSON configuration document.
//
// # Safety
// `json` must be a NUL-terminated string and `out` valid for writing a pointer.
enum MagflowStatus magflow_model_from_json(const char *json, struct MagflowModel **out);

// Releases a model. Null is ignored.
//
// # Safety
// `model` must be null or come from `magflow_model_*` and not be used afterwards.
void magflow_model_free(struct MagflowModel *model);

// Helicity by closed form and by phase-space integral.
//
// # Safety
// `model` must be a live model and `out` valid for writing.
enum MagflowStatus magflow_helicity(const struct MagflowModel *model, struct MagflowHelicity *out);

// `s_h`; fails with `Undefined` when the total flux vanishes.
//
// # Safety
// `model` must be a live model and `out` valid for writing.
enum MagflowStatus magflow_s_h(const struct MagflowModel *model, double *out);

// Two-sided estimate of the critical value with the model's budget.
//
// # Safety
// `model` must be a live model and `out` valid for writing.
enum MagflowStatus magflow_critical_estimate(const struct MagflowModel *model,
                                             struct MagflowCriticalEstimate *out);

// `q_r(s)` for real `s`.
//
// # Safety
// `out` must be valid for writing.
enum MagflowStatus magflow_q_kernel_real(double r, double s, double *out);

// `q_r(iα)` for `α ∈ [0, ½]`.
//
// # Safety
// `out` must be valid for writing.
enum MagflowStatus magflow_q_kernel_imag(double r, double alpha, double *out);

// Hyperbolic distance between two upper half-plane points.
//
// # Safety
// `out` must be valid for writing.
enum MagflowStatus magflow_hyp_distance(double x1, double y1, double x2, double y2, double *out);

// Integrates the flow at intensity `s` from `start` for `duration` with step about
// `dt`, using the model's integrator tolerance.
//
// The states at the uniform step times, starting with `start`, go to `states`. When
// `capacity` is too small nothing is written there, `*written` receives the count
// needed and the status is `BufferTooSmall`. `period` may be null; otherwise it
// receives the detected return time, or NaN when none is found.
//
// # Safety
// `states` must be valid for `capacity` elements (or null with capacity 0),
// `written` valid for writing, and `period` null or valid for writing.
enum MagflowStatus magflow_trajectory(const struct MagflowModel *model,
                                      double s,
                                      struct MagflowState start,
                                      double duration,
                                      double dt,
                                      struct MagflowState *states,
                                      size_t capacity,
                                      size_t *written,
                                      double *period);

// Serialized configuration of a model as JSON, allocated by the library.
// Release it with [`magflow_string_free`].
//
// # Safety
// `model` must be a live model and `out` valid for writing a pointer.
enum MagflowStatus magflow_model_config_json(const struct MagflowModel *model, char **out);

// Frees a string returned by the library. Null is ignored.
//
// # Safety
// `s` must be null or come from a magflow function documented to allocate it.
void magflow_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MAGFLOW_H */

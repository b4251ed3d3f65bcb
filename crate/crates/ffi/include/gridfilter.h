/* C interface for the gridfilter posterior backends. */

#pragma once

/* Generated by cbindgen from crates/ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible call.
 */
typedef enum GfStatus {
  /**
   * Success; output parameters are valid.
   */
  GF_STATUS_OK = 0,
  /**
   * An argument was out of range or inconsistent.
   */
  GF_STATUS_INVALID_ARGUMENT = 1,
  /**
   * The computation failed numerically (dead posterior, truncation
   * gates, grid too small).
   */
  GF_STATUS_NUMERIC_FAILURE = 2,
  /**
   * The requested backend cannot handle the configured potential.
   */
  GF_STATUS_INCOMPATIBLE_METHOD = 3,
  /**
   * A required pointer was null.
   */
  GF_STATUS_NULL_POINTER = 4,
} GfStatus;

/**
 * Opaque normalized density on a grid.
 */
typedef struct GfDensity GfDensity;

/**
 * Opaque uniform grid.
 */
typedef struct GfGrid GfGrid;

/**
 * Opaque observation series.
 */
typedef struct GfObservations GfObservations;

/**
 * Opaque model parameters (diffusion constant, evidence width, step).
 */
typedef struct GfParams GfParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread.
 *
 * # Safety
 * The pointer is owned by the library and valid until the next failing
 * call on the same thread. Do not free it.
 */
const char *gf_last_error(void);

/**
 * Creates model parameters.
 *
 * # Safety
 * `out` must be a valid pointer. The handle must be released with
 * [`gf_params_free`].
 */
enum GfStatus gf_params_new(double diffusion, double delta, double eps, struct GfParams **out);

/**
 * Releases parameters; a null handle is ignored.
 *
 * # Safety
 * `params` must be a handle from [`gf_params_new`], not yet freed.
 */
void gf_params_free(struct GfParams *params);

/**
 * Creates a uniform grid with `n_points >= 8` nodes on `[q_min, q_max]`.
 *
 * # Safety
 * `out` must be valid; release the handle with [`gf_grid_free`].
 */
enum GfStatus gf_grid_new(double q_min, double q_max, uintptr_t n_points, struct GfGrid **out);

/**
 * Releases a grid; a null handle is ignored.
 *
 * # Safety
 * `grid` must be a handle from [`gf_grid_new`], not yet freed.
 */
void gf_grid_free(struct GfGrid *grid);

/**
 * Creates an observation series of `len` values at spacing `eps`.
 *
 * # Safety
 * `values` must point to `len` readable doubles (or be null with
 * `len == 0`); release the handle with [`gf_observations_free`].
 */
enum GfStatus gf_observations_new(double eps,
                                  const double *values,
                                  uintptr_t len,
                                  struct GfObservations **out);

/**
 * Releases an observation series; a null handle is ignored.
 *
 * # Safety
 * `obs` must be a handle from [`gf_observations_new`], not yet freed.
 */
void gf_observations_free(struct GfObservations *obs);

/**
 * Creates a normalized Gaussian density on a grid.
 *
 * # Safety
 * `grid` must be a live grid handle; release the result with
 * [`gf_density_free`].
 */
enum GfStatus gf_density_gaussian(const struct GfGrid *grid,
                                  double mean,
                                  double std,
                                  struct GfDensity **out);

/**
 * Creates a density from raw values (renormalized internally).
 *
 * # Safety
 * `grid` must be live and `values` must point to as many doubles as the
 * grid has nodes; release the result with [`gf_density_free`].
 */
enum GfStatus gf_density_from_values(const struct GfGrid *grid,
                                     const double *values,
                                     uintptr_t len,
                                     struct GfDensity **out);

/**
 * Releases a density; a null handle is ignored.
 *
 * # Safety
 * `density` must be a handle produced by this library, not yet freed.
 */
void gf_density_free(struct GfDensity *density);

/**
 * Number of grid nodes of a density, or 0 for a null handle.
 *
 * # Safety
 * `density` must be live or null.
 */
uintptr_t gf_density_len(const struct GfDensity *density);

/**
 * Copies the density values into a caller buffer of `len` doubles.
 *
 * # Safety
 * `buf` must point to `len` writable doubles; `len` must equal
 * [`gf_density_len`].
 */
enum GfStatus gf_density_values(const struct GfDensity *density, double *buf, uintptr_t len);

/**
 * Mean and variance of a density.
 *
 * # Safety
 * All pointers must be valid.
 */
enum GfStatus gf_density_moments(const struct GfDensity *density, double *mean, double *variance);

/**
 * L1 distance between two densities on the same grid.
 *
 * # Safety
 * All pointers must be valid.
 */
enum GfStatus gf_l1_distance(const struct GfDensity *a, const struct GfDensity *b, double *out);

/**
 * Discrete-chain posterior with the quadratic evidence cost.
 *
 * # Safety
 * All handles must be live; release the result with [`gf_density_free`].
 */
enum GfStatus gf_run_chain(const struct GfDensity *prior,
                           const struct GfObservations *obs,
                           const struct GfParams *params,
                           struct GfDensity **out);

/**
 * Split-step integrator posterior. If `log_norm` is non-null it receives
 * the log of the evidence-induced norm decay.
 *
 * # Safety
 * All handles must be live; release the result with [`gf_density_free`].
 */
enum GfStatus gf_run_pde(const struct GfDensity *prior,
                         const struct GfObservations *obs,
                         const struct GfParams *params,
                         double *log_norm,
                         struct GfDensity **out);

/**
 * Closed-form posterior on `n_max` modes.
 *
 * # Safety
 * All handles must be live; release the result with [`gf_density_free`].
 */
enum GfStatus gf_run_analytic(const struct GfDensity *prior,
                              const struct GfObservations *obs,
                              const struct GfParams *params,
                              uintptr_t n_max,
                              struct GfDensity **out);

/**
 * Ladder-operator posterior on `n_max` modes.
 *
 * # Safety
 * All handles must be live; release the result with [`gf_density_free`].
 */
enum GfStatus gf_run_fock(const struct GfDensity *prior,
                          const struct GfObservations *obs,
                          const struct GfParams *params,
                          uintptr_t n_max,
                          struct GfDensity **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#ifndef EINSEL_H
#define EINSEL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EinselStatus {
  EINSEL_STATUS_OK = 0,
  EINSEL_STATUS_NULL_POINTER = 1,
  EINSEL_STATUS_INVALID_ARGUMENT = 2,
  EINSEL_STATUS_NUMERICAL = 3,
  EINSEL_STATUS_CONFIG = 4,
  EINSEL_STATUS_IO = 5,
  /**
   * A run finished but at least one hard assertion failed.
   */
  EINSEL_STATUS_ASSERTION_FAILED = 6,
  EINSEL_STATUS_PANIC = 7,
} EinselStatus;

/**
 * Opaque density matrix on the composite space.
 */
typedef struct EinselState EinselState;

/**
 * Opaque bipartite Hamiltonian.
 */
typedef struct EinselSystem EinselSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *einsel_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *einsel_version(void);

/**
 * Random bipartite Hamiltonian with unit-norm local terms and an
 * interaction of operator norm `coupling_scale`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum EinselStatus einsel_system_random(size_t d_s,
                                       size_t d_b,
                                       double coupling_scale,
                                       uint64_t seed,
                                       struct EinselSystem **out);

/**
 * # Safety
 * `sys` must be null or a handle from this library not yet freed.
 */
void einsel_system_free(struct EinselSystem *sys);

/**
 * # Safety
 * `sys` must be a live handle; `d_s` and `d_b` valid for writes.
 */
enum EinselStatus einsel_system_dims(const struct EinselSystem *sys, size_t *d_s, size_t *d_b);

/**
 * Haar-random pure state of dimension `dim`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum EinselStatus einsel_state_haar(size_t dim, uint64_t seed, struct EinselState **out);

/**
 * Exact evolution of `state` under the full Hamiltonian of `sys` for time `t`.
 *
 * # Safety
 * `sys` and `state` must be live handles; `out` valid for writes.
 */
enum EinselStatus einsel_state_evolve(const struct EinselSystem *sys,
                                      const struct EinselState *state,
                                      double t,
                                      struct EinselState **out);

/**
 * # Safety
 * `state` must be null or a handle from this library not yet freed.
 */
void einsel_state_free(struct EinselState *state);

/**
 * Trace distance between two states of equal dimension.
 *
 * # Safety
 * `a` and `b` must be live handles; `out` valid for writes.
 */
enum EinselStatus einsel_trace_distance(const struct EinselState *a,
                                        const struct EinselState *b,
                                        double *out);

/**
 * Instantaneous subsystem speed `1/2 |d rho^S/dt|_1`.
 *
 * # Safety
 * `sys` and `state` must be live handles; `out` valid for writes.
 */
enum EinselStatus einsel_subsystem_speed(const struct EinselSystem *sys,
                                         const struct EinselState *state,
                                         double *out);

/**
 * Pointwise bound `|H_SB| + v_S >= pairing functional` at one state.
 * `satisfied` is set to 1 or 0; any of the outputs may be null.
 *
 * # Safety
 * `sys` and `state` must be live handles; non-null outputs valid for writes.
 */
enum EinselStatus einsel_pointwise_check(const struct EinselSystem *sys,
                                         const struct EinselState *state,
                                         double *lhs,
                                         double *rhs,
                                         double *slack,
                                         int32_t *satisfied);

/**
 * Maximum-weight matching value of a symmetric `d x d` weight table given
 * in row-major order.
 *
 * # Safety
 * `weights` must point to `d * d` readable doubles; `out` valid for writes.
 */
enum EinselStatus einsel_max_pairing(const double *weights, size_t d, double *out);

/**
 * Runs the experiment described by a JSON config file. `hard_failures`, if
 * non-null, receives the number of failed hard assertions.
 *
 * # Safety
 * `config_path` must be a NUL-terminated string; `hard_failures` null or valid for writes.
 */
enum EinselStatus einsel_run_config(const char *config_path, size_t *hard_failures);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EINSEL_H */

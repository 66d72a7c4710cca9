#ifndef STLMC_H
#define STLMC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every exported function.
typedef enum StlmcStatus {
  STLMC_STATUS_OK = 0,
  STLMC_STATUS_NULL_POINTER = 1,
  STLMC_STATUS_INVALID_ARGUMENT = 2,
  STLMC_STATUS_DIMENSION_MISMATCH = 3,
  STLMC_STATUS_NUMERICAL_ERROR = 4,
  // The sampler gave up: rejection ceiling or retry budget reached.
  STLMC_STATUS_REJECTED = 5,
  // A Rust panic was caught at the boundary.
  STLMC_STATUS_PANIC = 6,
} StlmcStatus;

// Inverse-temperature ladder, with the run schedule when it was derived
// from a target.
typedef struct StlmcLadder StlmcLadder;

// Mixture target `f(x) = -ln Σ w_i e^{-f₀(x-μ_i)}`.
typedef struct StlmcTarget StlmcTarget;

// Per-run schedule for [`stlmc_sample`].
typedef struct StlmcRunParams {
  double swap_rate;
  double step_size;
  double total_time;
  double init_std;
} StlmcRunParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// Valid until the next call into the library from the same thread.
const char *stlmc_last_error(void);

// Parses a fixture document `{dim, weights, centers, base}`.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum StlmcStatus stlmc_target_from_json(const char *json, struct StlmcTarget **out);

// # Safety
// `target` must come from [`stlmc_target_from_json`] and not be used again.
void stlmc_target_free(struct StlmcTarget *target);

// # Safety
// Pointers must be valid.
enum StlmcStatus stlmc_target_dim(const struct StlmcTarget *target, size_t *out);

// `f(x)` for `x` of length `len`.
//
// # Safety
// `x` must point to `len` doubles and `out` to one.
enum StlmcStatus stlmc_target_value(const struct StlmcTarget *target,
                                    const double *x,
                                    size_t len,
                                    double *out);

// `∇f(x)` written to `grad`; both buffers have length `len`.
//
// # Safety
// `x` and `grad` must point to `len` doubles.
enum StlmcStatus stlmc_target_grad(const struct StlmcTarget *target,
                                   const double *x,
                                   size_t len,
                                   double *grad);

// Ladder and schedule derived from the target's structure at accuracy `eps`.
//
// # Safety
// Pointers must be valid.
enum StlmcStatus stlmc_ladder_for_target(const struct StlmcTarget *target,
                                         double eps,
                                         struct StlmcLadder **out);

// `β₁, β₁r, β₁r², …` capped at 1.
//
// # Safety
// `out` must be a valid pointer.
enum StlmcStatus stlmc_ladder_geometric(double beta1, double ratio, struct StlmcLadder **out);

// # Safety
// `ladder` must come from a ladder constructor and not be used again.
void stlmc_ladder_free(struct StlmcLadder *ladder);

// # Safety
// Pointers must be valid.
enum StlmcStatus stlmc_ladder_len(const struct StlmcLadder *ladder, size_t *out);

// Copies the inverse temperatures into `out`, which holds `len` doubles and
// must match the ladder length.
//
// # Safety
// `out` must point to `len` doubles.
enum StlmcStatus stlmc_ladder_betas(const struct StlmcLadder *ladder, double *out, size_t len);

// Schedule stored with a target-derived ladder.
//
// # Safety
// Pointers must be valid.
enum StlmcStatus stlmc_ladder_run_params(const struct StlmcLadder *ladder,
                                         struct StlmcRunParams *out);

// Estimates the partition ratios along the ladder, then writes `n` samples
// (row-major, `n × dim`) from independent accepted runs to `out`.
//
// `params` may be null for a target-derived ladder, in which case its stored
// schedule is used. `out_len` must equal `n × dim`.
//
// # Safety
// Pointers must be valid and `out` must hold `out_len` doubles.
enum StlmcStatus stlmc_sample(const struct StlmcTarget *target,
                              const struct StlmcLadder *ladder,
                              const struct StlmcRunParams *params,
                              uint64_t seed,
                              size_t n,
                              double *out,
                              size_t out_len);

// Poincaré constant `1/gap` of a reversible chain given its row-major
// `n × n` generator and stationary vector. Writes `+∞` for reducible chains.
//
// # Safety
// `generator` must hold `n²` doubles and `stationary` `n`.
enum StlmcStatus stlmc_poincare_constant(const double *generator,
                                         const double *stationary,
                                         size_t n,
                                         double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STLMC_H */

#ifndef QWQKD_H
#define QWQKD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QwStatus {
  QW_STATUS_OK = 0,
  QW_STATUS_INVALID_ARGUMENT = 1,
  QW_STATUS_NULL_POINTER = 2,
  QW_STATUS_RUNTIME = 3,
  QW_STATUS_PANIC = 4,
} QwStatus;

// Grid search over `θ, φ ∈ {kπ/N}`. Opaque to C.
typedef struct QwSweep QwSweep;

// Coined walk on a cycle. Opaque to C.
typedef struct QwWalk QwWalk;

// Best parameters for one `(P, F)`.
typedef struct QwSweepRow {
  size_t positions;
  uint32_t flip;
  double theta;
  double phi;
  uint64_t t;
  double c;
  double q_max;
} QwSweepRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until the next failing call.
const char *qw_last_error(void);

// Library version as a static NUL-terminated string.
const char *qw_version(void);

// `flip`: 0 = I, 1 = X, 2 = Y. Angles in radians.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum QwStatus qw_walk_new(size_t positions,
                          double theta,
                          double phi,
                          uint64_t steps,
                          uint32_t flip,
                          struct QwWalk **out);

// # Safety
// `walk` must be null or a handle from [`qw_walk_new`] not yet freed.
void qw_walk_free(struct QwWalk *walk);

// Born distribution after evolving the basis state `2x + s`; `len` must equal `2P`.
//
// # Safety
// `walk` must be a live handle and `probs` must point to `len` writable doubles.
enum QwStatus qw_walk_distribution(const struct QwWalk *walk,
                                   size_t initial_index,
                                   double *probs,
                                   size_t len);

// Minimum overlap constant over `t = 1..=t_max` for the walk's coin and flip.
//
// # Safety
// `walk` must be a live handle; `c` and `t_star` must be writable.
enum QwStatus qw_compute_c(const struct QwWalk *walk, uint64_t t_max, double *c, uint64_t *t_star);

// # Safety
// `out` must be writable.
enum QwStatus qw_max_tolerated_qber(double c, size_t positions, double *out);

// # Safety
// `out` must be writable.
enum QwStatus qw_key_rate(double c, double h_z, double h_w, double *out);

// Depolarizing parameter and error rate of the uniform Pauli channel.
//
// # Safety
// `lambda` and `qber` must be writable.
enum QwStatus qw_depolarizing(double error_weight, size_t positions, double *lambda, double *qber);

// # Safety
// `positions` must point to `n_positions` values, `flips` to `n_flips` codes, `out` must be writable.
enum QwStatus qw_sweep_new(const size_t *positions,
                           size_t n_positions,
                           const uint32_t *flips,
                           size_t n_flips,
                           uint32_t denominator,
                           uint64_t t_max,
                           struct QwSweep **out);

// Runs the sweep on `jobs` threads (0 = all cores). Replaces earlier results.
//
// # Safety
// `sweep` must be a live handle.
enum QwStatus qw_sweep_run(struct QwSweep *sweep, size_t jobs);

// # Safety
// `sweep` must be a live handle and `count` writable.
enum QwStatus qw_sweep_row_count(const struct QwSweep *sweep, size_t *count);

// # Safety
// `sweep` must be a live handle and `row` writable.
enum QwStatus qw_sweep_row(const struct QwSweep *sweep, size_t index, struct QwSweepRow *row);

// # Safety
// `sweep` must be null or a handle from [`qw_sweep_new`] not yet freed.
void qw_sweep_free(struct QwSweep *sweep);

// Runs a protocol from a JSON config and returns the transcript as JSON.
//
// The returned string is owned by the caller and must be released with [`qw_string_free`].
//
// # Safety
// `config_json` must be a NUL-terminated string; `out` must be writable.
enum QwStatus qw_protocol_run_json(const char *config_json, char **out);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void qw_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QWQKD_H */

#ifndef LVSWITCH_H
#define LVSWITCH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LvsStatus {
  LVS_STATUS_OK = 0,
  LVS_STATUS_NULL_POINTER = 1,
  LVS_STATUS_INVALID_UTF8 = 2,
  LVS_STATUS_PARAM = 3,
  LVS_STATUS_STRUCTURAL = 4,
  LVS_STATUS_PRECONDITION = 5,
  LVS_STATUS_SINGULAR = 6,
  LVS_STATUS_NUMERIC = 7,
  LVS_STATUS_IO = 8,
  LVS_STATUS_BUFFER_TOO_SMALL = 9,
  LVS_STATUS_PANIC = 10,
} LvsStatus;

typedef enum LvsSpecies {
  LVS_SPECIES_PREY1 = 1,
  LVS_SPECIES_PREY2 = 2,
  LVS_SPECIES_PREDATOR = 3,
} LvsSpecies;

typedef enum LvsFace {
  LVS_FACE_PREY1_AXIS = 0,
  LVS_FACE_PREY2_AXIS = 1,
  LVS_FACE_PREY1_PREY2 = 2,
  LVS_FACE_PREY1_PREDATOR = 3,
  LVS_FACE_PREY2_PREDATOR = 4,
  LVS_FACE_INTERIOR = 5,
} LvsFace;

// Opaque system handle.
typedef struct LvsSystem LvsSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *lvs_version(void);

// Copy of the last error message on this thread, or NULL if none. Release
// with [`lvs_string_free`].
char *lvs_last_error_message(void);

// # Safety
// `s` must come from this library and not have been freed.
void lvs_string_free(char *s);

// Parses a JSON run configuration (at least `model` and `switching`).
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum LvsStatus lvs_system_from_json(const char *json, struct LvsSystem **out);

// # Safety
// `h` must come from [`lvs_system_from_json`] and not have been freed.
void lvs_system_free(struct LvsSystem *h);

// # Safety
// `h` must be a live handle.
size_t lvs_system_n_envs(const struct LvsSystem *h);

// Writes the stationary distribution into `out[0..len]`; `len` must be at
// least the number of environments.
//
// # Safety
// `h` must be a live handle and `out` must point to `len` doubles.
enum LvsStatus lvs_stationary(const struct LvsSystem *h, double *out, size_t len);

// Drift `x_i f_i(x, env)` with a 0-based environment.
//
// # Safety
// `x` and `out` must point to 3 doubles.
enum LvsStatus lvs_drift(const struct LvsSystem *h, const double *x, size_t env, double *out);

// Per-capita rates `f_i(x, env)` with a 0-based environment.
//
// # Safety
// `x` and `out` must point to 3 doubles.
enum LvsStatus lvs_per_capita(const struct LvsSystem *h, const double *x, size_t env, double *out);

// Closed-form invasion rate of prey `invader` against the other prey's
// predator-prey equilibrium in the fixed 0-based environment `env`.
//
// # Safety
// `out` must be writable.
enum LvsStatus lvs_fixed_env_invasion_rate(const struct LvsSystem *h,
                                           size_t env,
                                           enum LvsSpecies invader,
                                           double *out);

// π-averaged closed forms for `λ2(μ13)` and `λ1(μ23)`.
//
// # Safety
// Both outputs must be writable.
enum LvsStatus lvs_averaged_invasion_rates(const struct LvsSystem *h,
                                           double *lambda2_mu13,
                                           double *lambda1_mu23);

// Simulation-based invasion rate of `invader` on `face` over `[0, t_end]`
// with the configured step size, burn-in fraction and batch count.
//
// # Safety
// Outputs must be writable.
enum LvsStatus lvs_estimate_invasion_rate(const struct LvsSystem *h,
                                          enum LvsFace face,
                                          enum LvsSpecies invader,
                                          double t_end,
                                          uint64_t seed,
                                          double *value,
                                          double *std_error);

// Simulates from `x0` (on any face) and writes the state at `t_end`.
// `env0 < 0` draws the initial environment from π.
//
// # Safety
// `x0` and `out` must point to 3 doubles.
enum LvsStatus lvs_simulate_final(const struct LvsSystem *h,
                                  const double *x0,
                                  int64_t env0,
                                  double t_end,
                                  uint64_t seed,
                                  double *out);

// Runs a command-line subcommand (`simulate`, `invade`, `classify`,
// `density`, `bracket` or `sweep`) with the handle's configuration, writing
// into `out_dir`. `threads = 0` uses the default pool.
//
// # Safety
// `command` and `out_dir` must be NUL-terminated strings.
enum LvsStatus lvs_run(const struct LvsSystem *h,
                       const char *command,
                       const char *out_dir,
                       size_t threads);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LVSWITCH_H */

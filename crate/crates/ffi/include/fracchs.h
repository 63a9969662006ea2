#ifndef FRACCHS_H
#define FRACCHS_H

/* Generated by cbindgen from the fracchs-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call in this interface.
 */
typedef enum FracchsStatus {
  /**
   * The call succeeded.
   */
  FRACCHS_STATUS_OK = 0,
  /**
   * A pointer, length, or numeric argument was unusable.
   */
  FRACCHS_STATUS_INVALID_ARGUMENT = 1,
  /**
   * The configuration failed validation; see `fracchs_last_error`.
   */
  FRACCHS_STATUS_CONFIG_ERROR = 2,
  /**
   * The simulation or an internal operation failed at runtime.
   */
  FRACCHS_STATUS_RUNTIME_ERROR = 3,
} FracchsStatus;

/**
 * Opaque simulator handle.
 */
typedef struct FracchsSim FracchsSim;

/**
 * One row of the energy/diagnostics trajectory, mirroring the CSV schema.
 */
typedef struct FracchsReport {
  double t;
  double energy;
  double diss_flux;
  double diss_nutrient;
  double diss_artificial;
  double coupling;
  double mass_phi;
  double mass_c;
  double phi_min;
  double phi_max;
  double c_min;
  double hs_norm_phi;
  double mu_w14_norm;
  double phase_violation;
} FracchsReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing this thread's most recent failure. Never null;
 * empty before the first failure. Owned by the library.
 */
const char *fracchs_last_error(void);

/**
 * Builds a simulator from TOML configuration text (same schema as the
 * CLI). On success writes the new handle to `out`.
 *
 * # Safety
 * `config_text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FracchsStatus fracchs_sim_new(const char *config_text, struct FracchsSim **out);

/**
 * Releases a handle obtained from `fracchs_sim_new`. Null is a no-op.
 *
 * # Safety
 * `sim` must be null or a pointer returned by `fracchs_sim_new` that has
 * not been freed yet.
 */
void fracchs_sim_free(struct FracchsSim *sim);

/**
 * Current simulation time, or NaN on a null or poisoned handle.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
double fracchs_sim_time(const struct FracchsSim *sim);

/**
 * Number of grid axes (1 or 2), or 0 on a null handle.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
uintptr_t fracchs_sim_dims(const struct FracchsSim *sim);

/**
 * Grid points along `axis`, or 0 when the handle or axis is invalid.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
uintptr_t fracchs_sim_n(const struct FracchsSim *sim, uintptr_t axis);

/**
 * Total sample count of each field (the length `fracchs_sim_copy_phi`
 * and `fracchs_sim_copy_c` expect), or 0 on a null handle.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
uintptr_t fracchs_sim_field_len(const struct FracchsSim *sim);

/**
 * Advances the simulation to `t_target` with the configured adaptive
 * stepper. Targets at or before the current time return immediately.
 * After a failure the handle is poisoned and must be freed.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum FracchsStatus fracchs_sim_advance(struct FracchsSim *sim, double t_target);

/**
 * Copies the phase field (row-major) into `out`, which must hold exactly
 * `fracchs_sim_field_len` samples.
 *
 * # Safety
 * `sim` must be null or a live handle; `out` must point to `len` doubles.
 */
enum FracchsStatus fracchs_sim_copy_phi(const struct FracchsSim *sim, double *out, uintptr_t len);

/**
 * Copies the nutrient field (row-major) into `out`, which must hold
 * exactly `fracchs_sim_field_len` samples.
 *
 * # Safety
 * `sim` must be null or a live handle; `out` must point to `len` doubles.
 */
enum FracchsStatus fracchs_sim_copy_c(const struct FracchsSim *sim, double *out, uintptr_t len);

/**
 * Evaluates the energy/diagnostics report at the current state.
 *
 * # Safety
 * `sim` must be null or a live handle; `out` must be a valid pointer.
 */
enum FracchsStatus fracchs_sim_report(const struct FracchsSim *sim, struct FracchsReport *out);

/**
 * Runs the built-in property checks with the given seed and returns the
 * number of failed checks (0 means everything passed). The failing check
 * names are recorded via `fracchs_last_error`.
 */
int32_t fracchs_verify(uint64_t seed);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* FRACCHS_H */

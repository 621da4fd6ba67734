#ifndef DARKDECO_H
#define DARKDECO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a call.
 */
typedef enum DdStatus {
  DD_STATUS_OK = 0,
  DD_STATUS_NULL_POINTER = 1,
  DD_STATUS_INVALID_ARGUMENT = 2,
  DD_STATUS_NUMERICAL = 3,
  DD_STATUS_PANIC = 4,
  DD_STATUS_INTERNAL = 5,
} DdStatus;

/**
 * Velocity distribution of the incident flux.
 */
typedef enum DdFluxMode {
  DD_FLUX_MODE_ANISOTROPIC = 0,
  DD_FLUX_MODE_ISOTROPIZED = 1,
  DD_FLUX_MODE_THERMALIZED = 2,
} DdFluxMode;

/**
 * Overburden between the halo and the experiment.
 */
typedef enum DdShielding {
  DD_SHIELDING_SPACE = 0,
  DD_SHIELDING_ABSORBING_EARTH = 1,
  DD_SHIELDING_REFLECTING_EARTH = 2,
} DdShielding;

/**
 * Interferometer parameters (opaque).
 */
typedef struct DdExperiment DdExperiment;

/**
 * Dark-sector parameters (opaque).
 */
typedef struct DdScenario DdScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static nul-terminated string.
 */
const char *dd_version(void);

/**
 * Length in bytes of the calling thread's last error message, excluding
 * the terminating nul; 0 when the last call succeeded.
 */
size_t dd_last_error_length(void);

/**
 * Copy the last error message into `buf` with a terminating nul.
 *
 * Returns the number of bytes written excluding the nul, or -1 when `buf`
 * is null or `len` is too small.
 *
 * # Safety
 * `buf` must point to at least `len` writable bytes.
 */
ptrdiff_t dd_last_error_message(char *buf, size_t len);

/**
 * New scenario with the common halo defaults and α_M = 1.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum DdStatus dd_scenario_new(double mass_ev, double mediator_mass_ev, struct DdScenario **out);

/**
 * Set the matter coupling α_M.
 *
 * # Safety
 * `scenario` must be a live handle from [`dd_scenario_new`].
 */
enum DdStatus dd_scenario_set_alpha_m(struct DdScenario *scenario, double alpha_m);

/**
 * Release a scenario; null is ignored.
 *
 * # Safety
 * `scenario` must be null or a live handle not used afterwards.
 */
void dd_scenario_free(struct DdScenario *scenario);

/**
 * Look up a registry experiment by name, ignoring case and punctuation.
 *
 * # Safety
 * `name` must be a nul-terminated string and `out` a valid pointer.
 */
enum DdStatus dd_experiment_lookup(const char *name, struct DdExperiment **out);

/**
 * Change the superposition separation (nm).
 *
 * # Safety
 * `experiment` must be a live handle.
 */
enum DdStatus dd_experiment_set_separation_nm(struct DdExperiment *experiment,
                                              double separation_nm);

/**
 * Release an experiment; null is ignored.
 *
 * # Safety
 * `experiment` must be null or a live handle not used afterwards.
 */
void dd_experiment_free(struct DdExperiment *experiment);

/**
 * Complex decoherence rate (Hz) in free space with the wind at
 * `wind_angle_rad` from the separation. `temperature_k` is read only for
 * the thermalized mode.
 *
 * # Safety
 * Handles must be live; `re_hz` and `im_hz` must be valid pointers.
 */
enum DdStatus dd_decoherence_rate(const struct DdScenario *scenario,
                                  const struct DdExperiment *experiment,
                                  enum DdFluxMode mode,
                                  double temperature_k,
                                  double wind_angle_rad,
                                  double *re_hz,
                                  double *im_hz);

/**
 * Detection threshold on the daily decoherence signal for a one-month run.
 *
 * # Safety
 * `experiment` must be a live handle and `threshold` a valid pointer.
 */
enum DdStatus dd_detection_threshold(const struct DdExperiment *experiment, double *threshold);

/**
 * Smallest detectable α_M for a one-month run at the default site.
 *
 * # Safety
 * Handles must be live and `alpha_hat` a valid pointer.
 */
enum DdStatus dd_critical_coupling(const struct DdScenario *scenario,
                                   const struct DdExperiment *experiment,
                                   enum DdShielding shielding,
                                   double *alpha_hat);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DARKDECO_H */

#ifndef TCMOL_H
#define TCMOL_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every API call.
 */
typedef enum {
  TCMOL_STATUS_OK = 0,
  TCMOL_STATUS_NULL_POINTER = 1,
  TCMOL_STATUS_INVALID_ARGUMENT = 2,
  TCMOL_STATUS_PHYSICS_FAILURE = 3,
  TCMOL_STATUS_NUMERICS_FAILURE = 4,
  TCMOL_STATUS_BUFFER_TOO_SMALL = 5,
  TCMOL_STATUS_NOT_RUN = 6,
  TCMOL_STATUS_PANIC = 7,
} TcmolStatus;

/**
 * Opaque simulation handle.
 */
typedef struct TcmolSim TcmolSim;

/**
 * Simulation parameters in boundary units (eV, Debye, V/nm, fs, au).
 */
typedef struct {
  double photon_energy_ev;
  double emitter_energy_ev;
  double mu_a_debye;
  double field_v_per_nm;
  double reduced_mass_me;
  double kappa_per_fs;
  double gamma_per_fs;
  double duration_fs;
  double dt_au;
  uint32_t n_emitters;
  uint32_t n_trajectories;
  uint32_t sample_stride;
  uint32_t workers;
  uint64_t master_seed;
} TcmolSimParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent error on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *tcmol_last_error_message(void);

/**
 * Default parameters: the production model at N = 0, desk-scale ensemble.
 */
TcmolSimParams tcmol_sim_params_default(void);

/**
 * Build a simulation on the production grid with the built-in surrogate
 * curves. On success `*out_sim` owns the handle; free with `tcmol_sim_free`.
 *
 * # Safety
 * `params` and `out_sim` must be valid pointers.
 */
TcmolStatus tcmol_sim_new(const TcmolSimParams *params, TcmolSim **out_sim);

/**
 * # Safety
 * `sim` must be a handle returned by `tcmol_sim_new` (or null), not yet freed.
 */
void tcmol_sim_free(TcmolSim *sim);

/**
 * Run the seeded trajectory ensemble and store the statistics in the handle.
 *
 * # Safety
 * `sim` must be a valid handle.
 */
TcmolStatus tcmol_sim_run(TcmolSim *sim);

/**
 * Number of sample times after a successful run; zero before.
 *
 * # Safety
 * `sim` must be a valid handle or null.
 */
uintptr_t tcmol_sim_sample_count(const TcmolSim *sim);

/**
 * Number of observable columns after a successful run; zero before.
 *
 * # Safety
 * `sim` must be a valid handle or null.
 */
uintptr_t tcmol_sim_column_count(const TcmolSim *sim);

/**
 * Name of one observable column; null if out of range. The pointer is owned
 * by the handle and valid until the next `tcmol_sim_run` or free.
 *
 * # Safety
 * `sim` must be a valid handle or null.
 */
const char *tcmol_sim_column_name(const TcmolSim *sim, uintptr_t column);

/**
 * Sample times in femtoseconds.
 *
 * # Safety
 * `sim` must be a valid handle; `out` must hold at least
 * `tcmol_sim_sample_count` doubles.
 */
TcmolStatus tcmol_sim_times_fs(const TcmolSim *sim, double *out, uintptr_t len);

/**
 * Ensemble mean of one observable column.
 *
 * # Safety
 * As for `tcmol_sim_times_fs`.
 */
TcmolStatus tcmol_sim_mean(const TcmolSim *sim, uintptr_t column, double *out, uintptr_t len);

/**
 * Standard error of one observable column.
 *
 * # Safety
 * As for `tcmol_sim_times_fs`.
 */
TcmolStatus tcmol_sim_stderr(const TcmolSim *sim, uintptr_t column, double *out, uintptr_t len);

/**
 * Energy retention (E(t) - E0)/(hbar omega_c) and its standard error.
 *
 * # Safety
 * As for `tcmol_sim_times_fs`; both buffers need `sample_count` doubles.
 */
TcmolStatus tcmol_sim_retention(const TcmolSim *sim,
                                double *out_retention,
                                double *out_stderr,
                                uintptr_t len);

/**
 * Internuclear distance (Angstrom) where the Pi-Sigma gap of the surrogate
 * crosses the photon energy.
 *
 * # Safety
 * `params` and `out_q` must be valid pointers.
 */
TcmolStatus tcmol_resonance_position_angstrom(const TcmolSimParams *params, double *out_q);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* TCMOL_H */

#ifndef QTHERMO_H
#define QTHERMO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QtStatus {
  QT_STATUS_OK = 0,
  QT_STATUS_INVALID_ARGUMENT = 1,
  QT_STATUS_CONFIG = 2,
  QT_STATUS_NUMERICAL = 3,
  QT_STATUS_IO = 4,
  QT_STATUS_PANIC = 5,
} QtStatus;

typedef enum QtInteraction {
  QT_INTERACTION_NONE = 0,
  QT_INTERACTION_ISING = 1,
  QT_INTERACTION_XY = 2,
  QT_INTERACTION_XYZ = 3,
} QtInteraction;

typedef struct QtScenario QtScenario;

/**
 * Two qubits in a common bath: Hamiltonian, generator and Gibbs states.
 */
typedef struct QtSystem QtSystem;

typedef struct QtTrajectory QtTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length including the NUL,
 * or 0 when there is no message.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t qt_last_error_message(char *buf, size_t len);

/**
 * Build the pair model. `delta` only enters the XY and XYZ Hamiltonians.
 *
 * # Safety
 * `out` must point to a writable handle slot.
 */
enum QtStatus qt_system_new(double omega1,
                            double omega2,
                            enum QtInteraction interaction,
                            double coupling,
                            double delta,
                            double temperature,
                            double lambda,
                            struct QtSystem **out);

/**
 * # Safety
 * `sys` must be null or a handle from [`qt_system_new`] not yet freed.
 */
void qt_system_free(struct QtSystem *sys);

/**
 * Write the 4x4 Hamiltonian (32 doubles).
 *
 * # Safety
 * `sys` must be a live handle; `out` must hold 32 doubles.
 */
enum QtStatus qt_system_hamiltonian(const struct QtSystem *sys, double *out);

/**
 * Write the 4x4 global Gibbs state (32 doubles).
 *
 * # Safety
 * `sys` must be a live handle; `out` must hold 32 doubles.
 */
enum QtStatus qt_system_thermal_state(const struct QtSystem *sys, double *out);

/**
 * Evolve a two-qubit state under the global generator with fixed-step RK4.
 *
 * # Safety
 * `sys` must be a live handle, `rho0` must hold 32 doubles and `out` must
 * point to a writable handle slot.
 */
enum QtStatus qt_system_evolve(const struct QtSystem *sys,
                               const double *rho0,
                               double t_end,
                               double dt,
                               size_t record_every,
                               struct QtTrajectory **out);

/**
 * Number of recorded states; 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t qt_trajectory_len(const struct QtTrajectory *traj);

/**
 * Dimension of the recorded states; 0 for a null or empty handle.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t qt_trajectory_dim(const struct QtTrajectory *traj);

/**
 * # Safety
 * `traj` must be a live handle and `out` a writable double.
 */
enum QtStatus qt_trajectory_time(const struct QtTrajectory *traj, size_t k, double *out);

/**
 * Write recorded state `k` (`2 dim^2` doubles).
 *
 * # Safety
 * `traj` must be a live handle and `out` must hold `2 dim^2` doubles.
 */
enum QtStatus qt_trajectory_state(const struct QtTrajectory *traj, size_t k, double *out);

/**
 * # Safety
 * `traj` must be null or a handle from [`qt_system_evolve`] not yet freed.
 */
void qt_trajectory_free(struct QtTrajectory *traj);

/**
 * Parse and validate a JSON scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable handle slot.
 */
enum QtStatus qt_scenario_load(const char *path, struct QtScenario **out);

/**
 * Run the scenario and write its artifacts under `out_dir`.
 *
 * # Safety
 * `sc` must be a live handle and `out_dir` a NUL-terminated string.
 */
enum QtStatus qt_scenario_run(const struct QtScenario *sc, const char *out_dir);

/**
 * # Safety
 * `sc` must be null or a handle from [`qt_scenario_load`] not yet freed.
 */
void qt_scenario_free(struct QtScenario *sc);

/**
 * Wootters concurrence of a two-qubit state (32 doubles).
 *
 * # Safety
 * `rho` must hold 32 doubles and `out` must be a writable double.
 */
enum QtStatus qt_concurrence(const double *rho, double *out);

/**
 * Von Neumann entropy (natural log) of a `dim x dim` state.
 *
 * # Safety
 * `rho` must hold `2 dim^2` doubles and `out` must be a writable double.
 */
enum QtStatus qt_vn_entropy(const double *rho, size_t dim, double *out);

/**
 * Trace distance between two `dim x dim` states.
 *
 * # Safety
 * `a` and `b` must each hold `2 dim^2` doubles and `out` must be writable.
 */
enum QtStatus qt_trace_distance(const double *a, const double *b, size_t dim, double *out);

/**
 * Smallest eigenvalue of the partial transpose on qubit 2; negative means
 * entangled.
 *
 * # Safety
 * `rho` must hold 32 doubles and `out` must be a writable double.
 */
enum QtStatus qt_ppt_min_eigenvalue(const double *rho, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QTHERMO_H */

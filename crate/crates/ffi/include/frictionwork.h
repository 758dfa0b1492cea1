#ifndef FRICTIONWORK_H
#define FRICTIONWORK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FwStatus {
  FW_STATUS_OK = 0,
  FW_STATUS_NULL_POINTER = 1,
  FW_STATUS_CONFIG = 2,
  FW_STATUS_NUMERICAL = 3,
  FW_STATUS_IO = 4,
  FW_STATUS_PANIC = 5,
  FW_STATUS_OUT_OF_RANGE = 6,
} FwStatus;

typedef enum FwSolver {
  FW_SOLVER_EXACT = 0,
  FW_SOLVER_FREE_FERMION = 1,
} FwSolver;

/**
 * Parsed run configuration.
 */
typedef struct FwConfig FwConfig;

/**
 * Sweep runner with its decomposition caches.
 */
typedef struct FwEngine FwEngine;

/**
 * Completed sweep.
 */
typedef struct FwSweep FwSweep;

/**
 * One parameter point. Energies in units of g, times in 1/g.
 */
typedef struct FwPoint {
  uint32_t n_sites;
  double coupling;
  double longitudinal;
  double h_initial;
  double delta_h;
  double duration;
  double t_initial;
  /**
   * Integrator step; 0 selects the default.
   */
  double step_dt;
} FwPoint;

typedef struct FwReport {
  double w_tau;
  double w_a;
  double w_fric;
  double t_a;
  double delta_s_d;
  double t_a_delta_s_d;
  double d_tau_a;
  double d_diag_a;
  double delta;
  double t_a_d_tau_a;
  double f_diag_ta;
  double f_a_ta;
  double w_opt;
  double t_mean_energy;
  /**
   * Nonzero when a relative entropy hit the infinity sentinel.
   */
  int32_t flagged;
} FwReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *fw_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fw_version(void);

/**
 * The reference point: N=8, g=1, L=1, h_i=1.5, dh=2, tau=1, T_i=3.
 */
struct FwPoint fw_point_default(void);

/**
 * New engine; `workers = 0` uses one thread per core. Returns null on
 * failure.
 */
struct FwEngine *fw_engine_new(uint32_t workers);

/**
 * # Safety
 * `engine` must be null or a handle from [`fw_engine_new`] not yet freed.
 */
void fw_engine_free(struct FwEngine *engine);

/**
 * Evaluates one point.
 *
 * # Safety
 * `engine`, `point` and `out` must be valid pointers; `out` is written only
 * on success.
 */
enum FwStatus fw_evaluate(const struct FwEngine *engine,
                          const struct FwPoint *point,
                          enum FwSolver solver,
                          struct FwReport *out);

/**
 * Parses configuration text (the same format the CLI reads).
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FwStatus fw_config_parse(const char *text, struct FwConfig **out);

/**
 * # Safety
 * `config` must be null or a handle from [`fw_config_parse`] not yet freed.
 */
void fw_config_free(struct FwConfig *config);

/**
 * Runs the sweep a config describes.
 *
 * # Safety
 * `engine`, `config` and `out` must be valid pointers.
 */
enum FwStatus fw_sweep_run(const struct FwEngine *engine,
                           const struct FwConfig *config,
                           struct FwSweep **out);

/**
 * # Safety
 * `sweep` must be null or a handle from [`fw_sweep_run`] not yet freed.
 */
void fw_sweep_free(struct FwSweep *sweep);

/**
 * Number of rows; 0 for a null handle.
 *
 * # Safety
 * `sweep` must be null or a live handle.
 */
size_t fw_sweep_len(const struct FwSweep *sweep);

/**
 * Axis value and report of row `index`. A row whose point failed returns
 * [`FwStatus::Numerical`] (or `Config`) with the row's message; the axis
 * value is still written.
 *
 * # Safety
 * `sweep` must be a live handle; `axis_value` and `out` valid pointers.
 */
enum FwStatus fw_sweep_row(const struct FwSweep *sweep,
                           size_t index,
                           double *axis_value,
                           struct FwReport *out);

/**
 * Writes the sweep table as CSV, atomically.
 *
 * # Safety
 * `sweep` must be a live handle and `path` a NUL-terminated string.
 */
enum FwStatus fw_sweep_write_csv(const struct FwSweep *sweep, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRICTIONWORK_H */

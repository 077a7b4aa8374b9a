#ifndef HYBRIDGRID_H
#define HYBRIDGRID_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum {
  HG_STATUS_OK = 0,
  HG_STATUS_NULL_POINTER = 1,
  HG_STATUS_INVALID_UTF8 = 2,
  HG_STATUS_INVALID_ARGUMENT = 3,
  HG_STATUS_IO = 4,
  HG_STATUS_PARSE = 5,
  HG_STATUS_SCHEMA = 6,
  HG_STATUS_VALIDATION = 7,
  HG_STATUS_MODEL = 8,
  HG_STATUS_NUMERICAL = 9,
  HG_STATUS_BUFFER_TOO_SMALL = 10,
  HG_STATUS_PANIC = 11,
} HgStatus;

// Controller family.
typedef enum {
  HG_MODE_PRIMARY = 0,
  HG_MODE_DUAL_DROOP = 1,
  HG_MODE_SECONDARY = 2,
} HgMode;

// A completed and certified simulation run.
typedef struct HgRun HgRun;

// A parsed and range-checked scenario.
typedef struct HgScenario HgScenario;

// Steady-state figures of a run.
typedef struct {
  double final_time;
  // Relative power-sharing error against the optimal dispatch.
  double sharing_error;
  // Largest final AC frequency deviation in rad/s.
  double omega_max;
  // Largest final weighted average DC voltage deviation.
  double vbar_max;
  // Final distance to the equilibrium, infinity norm.
  double terminal_error;
  size_t max_newton_iterations;
} HgRunMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null if it succeeded.
// The pointer stays valid until the next call on this thread.
const char *hg_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *hg_version(void);

// Parses a scenario document.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
HgStatus hg_scenario_from_json(const char *json, HgScenario **out);

// Reads and parses a scenario file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
HgStatus hg_scenario_load(const char *path, HgScenario **out);

// The bundled case-study scenario in primary mode.
//
// # Safety
// `out` must be a valid pointer.
HgStatus hg_scenario_preset_case_study(HgScenario **out);

// Selects the controller family.
//
// # Safety
// `scenario` must come from this library and not yet be freed.
HgStatus hg_scenario_set_mode(HgScenario *scenario, HgMode mode);

// Sets the simulation end time in seconds.
//
// # Safety
// `scenario` must come from this library and not yet be freed.
HgStatus hg_scenario_set_t_end(HgScenario *scenario, double t_end_s);

// Releases a scenario. Null is ignored.
//
// # Safety
// `scenario` must come from this library and not be used afterwards.
void hg_scenario_free(HgScenario *scenario);

// Integrates and certifies a scenario. A run whose certificate fails is
// still returned with [`HgStatus::Ok`]; see [`hg_run_certificate_passed`].
//
// # Safety
// `scenario` must be a live handle and `out` a valid pointer.
HgStatus hg_run(const HgScenario *scenario, HgRun **out);

// Releases a run. Null is ignored.
//
// # Safety
// `run` must come from this library and not be used afterwards.
void hg_run_free(HgRun *run);

// Number of stored samples, or 0 for a null handle.
//
// # Safety
// `run` must be null or a live handle.
size_t hg_run_sample_count(const HgRun *run);

// 1 if every applicable certificate check passed, 0 if not, -1 for a null handle.
//
// # Safety
// `run` must be null or a live handle.
int hg_run_certificate_passed(const HgRun *run);

// Command-line exit code of the run: 0 certified, 1 certificate violation.
//
// # Safety
// `run` must be null or a live handle.
int hg_run_exit_code(const HgRun *run);

// Copies the steady-state figures of `run` into `out`.
//
// # Safety
// `run` must be a live handle and `out` a valid pointer.
HgStatus hg_run_metrics(const HgRun *run, HgRunMetrics *out);

// Copies the plain-text certificate summary into `buf` (NUL-terminated).
// `needed` receives the required size including the terminator. With a
// null `buf` or a short buffer, only `needed` is written and
// [`HgStatus::BufferTooSmall`] is returned for the short buffer.
//
// # Safety
// `run` must be a live handle, `buf` null or writable for `len` bytes, and
// `needed` null or valid.
HgStatus hg_run_certificate_summary(const HgRun *run, char *buf, size_t len, size_t *needed);

// Writes the trajectory CSV to `path`, keeping every `record_every`-th sample.
//
// # Safety
// `run` must be a live handle and `path` a NUL-terminated string.
HgStatus hg_run_write_trajectory_csv(const HgRun *run, const char *path, size_t record_every);

// Writes every artifact of the run (trajectory, certificate, summary) into `dir`.
//
// # Safety
// `run` must be a live handle and `dir` a NUL-terminated string.
HgStatus hg_run_write_outputs(const HgRun *run, const char *dir);

// Minimum-cost dispatch `p* = q·λ` over `n` buses. Buses with `q = 0`
// receive nothing. `cost` may be null.
//
// # Safety
// `p_l`, `p_u`, `q` must be readable and `p_star` writable for `n` values.
HgStatus hg_optimal_dispatch(const double *p_l,
                             const double *p_u,
                             const double *q,
                             size_t n,
                             double *p_star,
                             double *cost);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYBRIDGRID_H */

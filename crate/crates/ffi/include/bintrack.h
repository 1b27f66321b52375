#ifndef BINTRACK_H
#define BINTRACK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of values per trace record.
 */
#define BT_TRACE_WIDTH 15

typedef enum BtStatus {
  BT_STATUS_OK = 0,
  BT_STATUS_NULL_POINTER = 1,
  BT_STATUS_INVALID_ARGUMENT = 2,
  BT_STATUS_PARSE_ERROR = 3,
  /**
   * The simulation stopped early; the partial trace is still returned.
   */
  BT_STATUS_SIMULATION_ABORTED = 4,
  BT_STATUS_OUT_OF_RANGE = 5,
  BT_STATUS_PANIC = 6,
} BtStatus;

/**
 * Opaque scenario handle.
 */
typedef struct BtScenario BtScenario;

/**
 * Opaque trace handle.
 */
typedef struct BtTrace BtTrace;

typedef struct BtVec2 {
  double x;
  double y;
} BtVec2;

typedef struct BtGoal {
  double xi_star;
  double eta_star;
  double c_star;
} BtGoal;

typedef struct BtGains {
  double kappa_c;
  double kappa_eta;
  double kappa_xi;
} BtGains;

/**
 * Velocity commands of the left and right vehicle.
 */
typedef struct BtControl {
  struct BtVec2 u_l;
  struct BtVec2 u_r;
} BtControl;

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL,
 * so a buffer of `return + 1` bytes always suffices.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t bt_last_error_message(char *buf, size_t len);

/**
 * Local Cartesian position of the elliptic coordinate `(xi, eta)` for
 * foci at `(-c, 0)` and `(c, 0)`.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum BtStatus bt_elliptic_to_local(double xi, double eta, double c, struct BtVec2 *out);

/**
 * Elliptic coordinate of a local Cartesian point.
 *
 * # Safety
 * `xi` and `eta` must be null or valid for writes.
 */
enum BtStatus bt_local_to_elliptic(struct BtVec2 point, double c, double *xi, double *eta);

/**
 * Elliptic coordinate from the target's ranges to the left and right
 * vehicle. `upper` selects the half-plane (`y >= 0`) of the target.
 *
 * # Safety
 * `xi` and `eta` must be null or valid for writes.
 */
enum BtStatus bt_distances_to_elliptic(double d_left,
                                       double d_right,
                                       double c,
                                       bool upper,
                                       double *xi,
                                       double *eta);

/**
 * Velocity commands for vehicles at `p_l`, `p_r` tracking a target at
 * `p_t`.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum BtStatus bt_control(struct BtVec2 p_l,
                         struct BtVec2 p_r,
                         struct BtVec2 p_t,
                         struct BtGoal goal,
                         struct BtGains gains,
                         struct BtControl *out);

/**
 * Parses a TOML scenario document.
 *
 * # Safety
 * `text` must be null or a NUL-terminated string; `out` must be null or
 * valid for writes.
 */
enum BtStatus bt_scenario_from_toml(const char *text, struct BtScenario **out);

/**
 * One of the built-in scenarios (`fig3a` .. `fig5`).
 *
 * # Safety
 * `name` must be null or a NUL-terminated string; `out` must be null or
 * valid for writes.
 */
enum BtStatus bt_scenario_builtin(const char *name, struct BtScenario **out);

/**
 * # Safety
 * `scenario` must be null or a handle from this library not yet freed.
 */
void bt_scenario_free(struct BtScenario *scenario);

/**
 * Simulates `scenario`, recording every `decimate`-th step (0 uses the
 * scenario's own setting). On `BT_STATUS_SIMULATION_ABORTED` `*out` still
 * receives the partial trace.
 *
 * # Safety
 * `scenario` must be null or a live handle; `out` must be null or valid for
 * writes.
 */
enum BtStatus bt_run(const struct BtScenario *scenario, size_t decimate, struct BtTrace **out);

/**
 * Number of records in `trace`, or 0 for a null handle.
 *
 * # Safety
 * `trace` must be null or a live handle.
 */
size_t bt_trace_len(const struct BtTrace *trace);

/**
 * Writes record `index` as `BT_TRACE_WIDTH` values in the column order of
 * [`bt_trace_column_name`].
 *
 * # Safety
 * `trace` must be null or a live handle; `values` must be null or valid for
 * `BT_TRACE_WIDTH` writes.
 */
enum BtStatus bt_trace_record(const struct BtTrace *trace, size_t index, double *values);

/**
 * Static NUL-terminated name of trace column `index`, or null when out of
 * range.
 */
const char *bt_trace_column_name(size_t index);

/**
 * # Safety
 * `trace` must be null or a handle from this library not yet freed.
 */
void bt_trace_free(struct BtTrace *trace);

#endif  /* BINTRACK_H */

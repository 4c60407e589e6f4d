#ifndef BOOKCELL_H
#define BOOKCELL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum BookcellStatus {
  BOOKCELL_STATUS_OK = 0,
  BOOKCELL_STATUS_NULL_POINTER = 1,
  BOOKCELL_STATUS_INVALID_ARGUMENT = 2,
  BOOKCELL_STATUS_CONFIG = 3,
  BOOKCELL_STATUS_SIMULATION = 4,
  BOOKCELL_STATUS_NUMERIC_BLOWUP = 5,
  BOOKCELL_STATUS_SNAPSHOT = 6,
  BOOKCELL_STATUS_PANIC = 7,
} BookcellStatus;

/**
 * Action quadrant of a genome symbol.
 */
typedef enum BookcellAction {
  BOOKCELL_ACTION_EXPANSION = 0,
  BOOKCELL_ACTION_CONNECTION = 1,
  BOOKCELL_ACTION_DISCONNECTION = 2,
  BOOKCELL_ACTION_TRANSITION = 3,
} BookcellAction;

/**
 * Opaque simulation handle.
 */
typedef struct BookcellSim BookcellSim;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *bookcell_version(void);

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *bookcell_last_error(void);

/**
 * Builds a seeded simulation from TOML configuration text. An empty
 * string selects the defaults.
 *
 * # Safety
 * `config_toml` must be a NUL-terminated string and `out` a valid
 * pointer.
 */
enum BookcellStatus bookcell_sim_new(const char *config_toml, struct BookcellSim **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `sim` must be NULL or a handle from this library not yet freed.
 */
void bookcell_sim_free(struct BookcellSim *sim);

/**
 * Advances every field by `steps` steps.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum BookcellStatus bookcell_sim_step(struct BookcellSim *sim, uint64_t steps);

/**
 * Selects parallel or serial field execution. Results are identical.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum BookcellStatus bookcell_sim_set_parallel(struct BookcellSim *sim, bool parallel);

/**
 * Steps taken so far.
 *
 * # Safety
 * `sim` must be a live handle and `out` a valid pointer.
 */
enum BookcellStatus bookcell_sim_step_count(const struct BookcellSim *sim, uint64_t *out);

/**
 * Number of fields.
 *
 * # Safety
 * `sim` must be a live handle and `out` a valid pointer.
 */
enum BookcellStatus bookcell_sim_field_count(const struct BookcellSim *sim, size_t *out);

/**
 * Living cells summed over all fields.
 *
 * # Safety
 * `sim` must be a live handle and `out` a valid pointer.
 */
enum BookcellStatus bookcell_sim_cell_count(const struct BookcellSim *sim, size_t *out);

/**
 * Removes the metrics rows accumulated by `field` and returns them as CSV
 * text with a header line. The buffer is not NUL-terminated.
 *
 * # Safety
 * `sim` must be a live handle; `out` and `out_len` valid pointers.
 */
enum BookcellStatus bookcell_sim_drain_metrics_csv(struct BookcellSim *sim,
                                                   size_t field,
                                                   uint8_t **out,
                                                   size_t *out_len);

/**
 * Serializes the full simulation state.
 *
 * # Safety
 * `sim` must be a live handle; `out` and `out_len` valid pointers.
 */
enum BookcellStatus bookcell_sim_snapshot(const struct BookcellSim *sim,
                                          uint8_t **out,
                                          size_t *out_len);

/**
 * Rebuilds a simulation from snapshot bytes.
 *
 * # Safety
 * `data` must point to `len` readable bytes; `out` must be a valid pointer.
 */
enum BookcellStatus bookcell_sim_restore(const uint8_t *data, size_t len, struct BookcellSim **out);

/**
 * Releases a buffer returned by this library. NULL is ignored.
 *
 * # Safety
 * `data` and `len` must come from one call of this library, not yet freed.
 */
void bookcell_buffer_free(uint8_t *data, size_t len);

/**
 * Action quadrant of an alphabet symbol.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum BookcellStatus bookcell_classify_action(uint8_t symbol, enum BookcellAction *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BOOKCELL_H */

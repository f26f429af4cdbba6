/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef STC_H
#define STC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. The first four match the command-line exit codes.
 */
typedef enum StcStatus {
  STC_STATUS_OK = 0,
  STC_STATUS_CHECK_FAILED = 1,
  STC_STATUS_VALIDATION = 2,
  STC_STATUS_RUNTIME = 3,
  STC_STATUS_INVALID_ARGUMENT = 4,
  STC_STATUS_PANIC = 5,
} StcStatus;

/**
 * A parsed and validated program.
 */
typedef struct StcProgram StcProgram;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a JSON program. On success `*out` receives a handle owned by the
 * caller, to be released with `stc_program_free`.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum StcStatus stc_program_parse(const char *json, struct StcProgram **out);

/**
 * # Safety
 * `program` must be null or a handle from `stc_program_parse` not yet freed.
 */
void stc_program_free(struct StcProgram *program);

/**
 * Runs the program on its own input. `mode` is one of `seq`,
 * `interleaved`, `pipeline`, `auto`; `workers == 0` means one per CPU.
 * `*out_json` receives `{"output": [...], "final_state": {...}}`.
 *
 * # Safety
 * `program` must be a live handle, `mode` a valid string, `out_json` a valid pointer.
 */
enum StcStatus stc_program_run(const struct StcProgram *program,
                               const char *mode,
                               uint32_t workers,
                               char **out_json);

/**
 * Renders the thread graph as DOT.
 *
 * # Safety
 * `program` must be a live handle and `out` a valid pointer.
 */
enum StcStatus stc_program_dot(const struct StcProgram *program, bool extended, char **out);

/**
 * Canonical JSON serialization of the program.
 *
 * # Safety
 * `program` must be a live handle and `out` a valid pointer.
 */
enum StcStatus stc_program_to_json(const struct StcProgram *program, char **out);

/**
 * Runs the fuzz equivalence suite. `*passed` receives the number of
 * trials on which every executor agreed. Returns `CheckFailed` when any
 * trial diverged.
 *
 * # Safety
 * `passed` must be null or a valid pointer.
 */
enum StcStatus stc_check_fuzz(uint64_t seed, uint32_t trials, uint32_t *passed);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void stc_string_free(char *s);

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next library call on this thread.
 */
const char *stc_last_error(void);

/**
 * Library version, a static string.
 */
const char *stc_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STC_H */

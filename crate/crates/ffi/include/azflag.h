/* C interface to the azflag stability-threshold engine. */

#ifndef AZFLAG_H
#define AZFLAG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status of an FFI call.
 */
typedef enum AzStatus {
  AzStatus_Ok = 0,
  /**
   * File could not be read.
   */
  AzStatus_Io = 1,
  /**
   * Malformed JSON.
   */
  AzStatus_Parse = 2,
  /**
   * Well-formed but invalid case data.
   */
  AzStatus_Validation = 3,
  /**
   * The pipeline rejected the case.
   */
  AzStatus_Compute = 4,
  /**
   * A required pointer argument was null or not valid UTF-8.
   */
  AzStatus_BadArgument = 5,
  /**
   * Internal failure; details via az_last_error.
   */
  AzStatus_Internal = 6,
} AzStatus;

/**
 * Opaque loaded flag case.
 */
typedef struct AzCase AzCase;

/**
 * Opaque computation report.
 */
typedef struct AzReport AzReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, or null when the
 * last call succeeded. Valid until the next FFI call on the thread.
 */
const char *az_last_error(void);

/**
 * Load and validate a case file. On success writes a handle the caller
 * must release with az_case_free.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum AzStatus az_case_load(const char *path, struct AzCase **out);

/**
 * Load and validate a case from a JSON string instead of a file.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum AzStatus az_case_load_json(const char *json, struct AzCase **out);

/**
 * Release a case handle. Null is ignored.
 *
 * # Safety
 * `case` must come from az_case_load / az_case_load_json, unreleased.
 */
void az_case_free(struct AzCase *case_);

/**
 * Name of a loaded case; free with az_string_free.
 *
 * # Safety
 * `case` must be a live handle.
 */
char *az_case_name(const struct AzCase *case_);

/**
 * Run the full pipeline on a loaded case. On success writes a report
 * handle the caller must release with az_report_free. Verification or
 * computation failures still produce a report (with pass = 0); only
 * infrastructure errors return a non-Ok status.
 *
 * # Safety
 * `case` must be a live handle; `out` must be writable.
 */
enum AzStatus az_case_run(const struct AzCase *case_, struct AzReport **out);

/**
 * Release a report handle. Null is ignored.
 *
 * # Safety
 * `report` must come from az_case_run, unreleased.
 */
void az_report_free(struct AzReport *report);

/**
 * 1 when the case passed all checks and expected-value comparisons.
 *
 * # Safety
 * `report` must be a live handle.
 */
int32_t az_report_pass(const struct AzReport *report);

/**
 * Certified lower bound as an exact "p/q" string, or null when the
 * pipeline failed; free with az_string_free.
 *
 * # Safety
 * `report` must be a live handle.
 */
char *az_report_delta_bound(const struct AzReport *report);

/**
 * Whole report serialized as JSON (schema azflag-report/1); free with
 * az_string_free.
 *
 * # Safety
 * `report` must be a live handle.
 */
char *az_report_json(const struct AzReport *report);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from an az_* function, unreleased.
 */
void az_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AZFLAG_H */

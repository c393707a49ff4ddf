#ifndef ACFORMS_H
#define ACFORMS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. `ACF_STATUS_COMPUTATION` and `ACF_STATUS_USAGE` match the
 * command-line exit codes 1 and 2.
 */
typedef enum AcfStatus {
  ACF_STATUS_OK = 0,
  ACF_STATUS_COMPUTATION = 1,
  ACF_STATUS_USAGE = 2,
  ACF_STATUS_NULL_ARGUMENT = 3,
  ACF_STATUS_INVALID_UTF8 = 4,
  ACF_STATUS_PANIC = 5,
} AcfStatus;

/**
 * Parsed run configuration.
 */
typedef struct AcfConfig AcfConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static nul-terminated string.
 */
const char *acf_version(void);

/**
 * Message of the last failed call on this thread, or null after a
 * successful call. Valid until the next call on this thread.
 */
const char *acf_last_error(void);

/**
 * Parses configuration text (dotted key-value lines or JSON).
 *
 * # Safety
 * `text` must be null or a nul-terminated string; `out` must be null or
 * writable.
 */
enum AcfStatus acf_config_parse(const char *text, struct AcfConfig **out);

/**
 * Reads and parses a configuration file.
 *
 * # Safety
 * As for [`acf_config_parse`].
 */
enum AcfStatus acf_config_load(const char *path, struct AcfConfig **out);

/**
 * Releases a configuration. Null is ignored.
 *
 * # Safety
 * `cfg` must be null or a handle from this library not yet freed.
 */
void acf_config_free(struct AcfConfig *cfg);

/**
 * Canonical dotted-key text of the configuration. Free with
 * [`acf_string_free`].
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be null or writable.
 */
enum AcfStatus acf_config_canonical(const struct AcfConfig *cfg, char **out);

/**
 * Value of the configured functional on the extended structure.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be null or writable.
 */
enum AcfStatus acf_functional_value(const struct AcfConfig *cfg, double *out);

/**
 * Classification report as JSON. `lattice_consistent` receives 1 or 0 when
 * not null. Free the string with [`acf_string_free`].
 *
 * # Safety
 * `cfg` must be a live handle; `out_json` must be null or writable;
 * `lattice_consistent` may be null.
 */
enum AcfStatus acf_classify(const struct AcfConfig *cfg, char **out_json, int *lattice_consistent);

/**
 * Runs a named verification suite. The report is written as JSON and
 * `passed` receives 1 or 0 when not null.
 *
 * # Safety
 * `cfg` must be a live handle; `suite` a nul-terminated string; `out_json`
 * must be null or writable; `passed` may be null.
 */
enum AcfStatus acf_verify(const struct AcfConfig *cfg,
                          const char *suite,
                          char **out_json,
                          int *passed);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void acf_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ACFORMS_H */

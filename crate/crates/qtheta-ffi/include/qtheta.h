#ifndef QTHETA_H
#define QTHETA_H

/* Generated by cbindgen from qtheta-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes mirroring the CLI exit codes.
 */
#define QTHETA_OK 0

/**
 * An identity failed: at least one coefficient differs.
 */
#define QTHETA_MISMATCH 1

/**
 * Bad arguments: unknown id, malformed JSON, window too small, null input.
 */
#define QTHETA_USAGE 2

/**
 * Internal or non-evaluable error.
 */
#define QTHETA_INTERNAL 3

/**
 * Opaque catalog handle.
 */
typedef struct QthetaCatalog QthetaCatalog;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Create a catalog with the standard identities.
 */
struct QthetaCatalog *qtheta_catalog_new(void);

/**
 * Create a catalog extended with identities from a definitions JSON
 * document (schema 1). On failure returns NULL and, when `err_out` is
 * non-null, stores a description the caller must free.
 *
 * # Safety
 * `defs_json` must be NULL or a valid NUL-terminated UTF-8 string;
 * `err_out`, when non-null, must point to writable memory.
 */
struct QthetaCatalog *qtheta_catalog_with_definitions(const char *defs_json, char **err_out);

/**
 * Release a catalog handle. NULL is allowed.
 *
 * # Safety
 * `cat` must be NULL or a pointer previously returned by a catalog
 * constructor, not yet freed.
 */
void qtheta_catalog_free(struct QthetaCatalog *cat);

/**
 * Number of identities in the catalog; -1 for a NULL handle.
 *
 * # Safety
 * `cat` must be NULL or a live catalog handle.
 */
int32_t qtheta_catalog_len(const struct QthetaCatalog *cat);

/**
 * JSON listing of the catalog (`{"schema":1,"identities":[...]}`).
 * Returns a status code; the listing is stored in `json_out`.
 *
 * # Safety
 * `cat` must be a live catalog handle; `json_out` must be writable.
 */
int32_t qtheta_catalog_list_json(const struct QthetaCatalog *cat, char **json_out);

/**
 * Default verification order of one identity; -1 when unknown.
 *
 * # Safety
 * `cat` must be a live catalog handle; `id` a NUL-terminated string.
 */
int64_t qtheta_default_order(const struct QthetaCatalog *cat, const char *id);

/**
 * Check one identity to the given order (0 means the identity's default).
 * Returns QTHETA_OK on an exact match, QTHETA_MISMATCH when a coefficient
 * differs, QTHETA_USAGE / QTHETA_INTERNAL on errors. When `report_out` is
 * non-null it receives the JSON report (schema 1) on success or mismatch.
 *
 * # Safety
 * `cat` must be a live catalog handle, `id` a NUL-terminated string, and
 * `report_out` NULL or writable.
 */
int32_t qtheta_check(const struct QthetaCatalog *cat,
                     const char *id,
                     int64_t order,
                     char **report_out);

/**
 * Dual-path oracle check: windowed brute force against exact evaluation.
 * `window` of 0 means the minimum admissible window `2 * order + 4`.
 *
 * # Safety
 * As for `qtheta_check`.
 */
int32_t qtheta_oracle(const struct QthetaCatalog *cat,
                      const char *id,
                      int64_t order,
                      int64_t window,
                      char **report_out);

/**
 * Expand an identity side (`"<id>.lhs"` / `"<id>.rhs"`) or an inline JSON
 * expression to the given order. The dump (one `q^e : coefficient` line
 * per exponent) is stored in `dump_out`.
 *
 * # Safety
 * As for `qtheta_check`.
 */
int32_t qtheta_expand(const struct QthetaCatalog *cat,
                      const char *target,
                      int64_t order,
                      char **dump_out);

/**
 * Release a string returned by this library. NULL is allowed.
 *
 * # Safety
 * `s` must be NULL or a pointer previously returned through one of the
 * out-parameters, not yet freed.
 */
void qtheta_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* QTHETA_H */

#ifndef FOLKRAG_H
#define FOLKRAG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum FolkragStatus {
  FOLKRAG_STATUS_OK = 0,
  FOLKRAG_STATUS_NULL_ARGUMENT = 1,
  FOLKRAG_STATUS_INVALID_UTF8 = 2,
  FOLKRAG_STATUS_PARSE_ERROR = 3,
  FOLKRAG_STATUS_INVALID_ARGUMENT = 4,
  FOLKRAG_STATUS_CORPUS_ERROR = 5,
  FOLKRAG_STATUS_INTERNAL = 6,
  FOLKRAG_STATUS_PANIC = 7,
} FolkragStatus;

/**
 * A loaded corpus index.
 */
typedef struct FolkragIndex FolkragIndex;

/**
 * A parsed tune.
 */
typedef struct FolkragTune FolkragTune;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call on this thread.
 */
const char *folkrag_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void folkrag_string_free(char *s);

/**
 * Parses abc text into a new tune handle.
 *
 * # Safety
 * `abc` must be a valid NUL-terminated string and `out` writable.
 */
enum FolkragStatus folkrag_tune_parse(const char *abc, struct FolkragTune **out);

/**
 * # Safety
 * `tune` must be null or a handle from [`folkrag_tune_parse`].
 */
void folkrag_tune_free(struct FolkragTune *tune);

/**
 * Writes the tune back to abc text.
 *
 * # Safety
 * `tune` must be a live handle and `out` writable.
 */
enum FolkragStatus folkrag_tune_serialize(const struct FolkragTune *tune, char **out);

/**
 * Canonical text used for exact-copy detection.
 *
 * # Safety
 * `tune` must be a live handle and `out` writable.
 */
enum FolkragStatus folkrag_tune_normalize(const struct FolkragTune *tune, char **out);

/**
 * Validation issues as a JSON array of objects with `severity`, `code`,
 * `bar_index`, `detail`, `expected` and `actual`.
 *
 * # Safety
 * `tune` must be a live handle and `out` writable.
 */
enum FolkragStatus folkrag_tune_validate_json(const struct FolkragTune *tune, char **out);

/**
 * Loads an index file written by the `ingest` command.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` writable.
 */
enum FolkragStatus folkrag_index_load(const char *path, struct FolkragIndex **out);

/**
 * # Safety
 * `index` must be null or a handle from [`folkrag_index_load`].
 */
void folkrag_index_free(struct FolkragIndex *index);

/**
 * Number of entries, or 0 for a null handle.
 *
 * # Safety
 * `index` must be null or a live handle.
 */
size_t folkrag_index_len(const struct FolkragIndex *index);

/**
 * Ranks entries against comma-separated `tags`, returning at most `k`
 * candidates as a JSON array of `{entry_id, similarity, matched_tags}`.
 * Similarity is an exact fraction such as `"2/3"`.
 *
 * # Safety
 * `index` must be a live handle, `tags` a valid string, `out` writable.
 */
enum FolkragStatus folkrag_index_retrieve_json(const struct FolkragIndex *index,
                                               const char *tags,
                                               size_t k,
                                               char **out);

/**
 * Looks for a corpus entry that is an exact copy of `tune`. On success
 * `*out_id` holds the entry id, or null when there is none.
 *
 * # Safety
 * Both handles must be live and `out_id` writable.
 */
enum FolkragStatus folkrag_index_find_duplicate(const struct FolkragIndex *index,
                                                const struct FolkragTune *tune,
                                                char **out_id);

/**
 * Jaccard similarity of two comma-separated tag lists as an exact fraction
 * in lowest terms. Two empty lists give 0/1.
 *
 * # Safety
 * `a` and `b` must be valid strings; `numer` and `denom` writable.
 */
enum FolkragStatus folkrag_jaccard(const char *a, const char *b, int64_t *numer, int64_t *denom);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FOLKRAG_H */

#ifndef NL2FIX_H
#define NL2FIX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum Nl2fixStatus {
  NL2FIX_STATUS_OK = 0,
  NL2FIX_STATUS_NULL_POINTER = 1,
  NL2FIX_STATUS_INVALID_UTF8 = 2,
  NL2FIX_STATUS_DOMAIN = 3,
  NL2FIX_STATUS_IO = 4,
  NL2FIX_STATUS_PARSE = 5,
  NL2FIX_STATUS_OUT_OF_RANGE = 6,
  NL2FIX_STATUS_PANIC = 7,
} Nl2fixStatus;

/**
 * Opaque handle to a loaded corpus.
 */
typedef struct Nl2fixCorpus Nl2fixCorpus;

/**
 * CodeBLEU components. `dataflow_match` is NaN when `has_dataflow` is 0.
 */
typedef struct Nl2fixSimilarity {
  double bleu;
  double keyword_bleu;
  double syntax_match;
  double dataflow_match;
  uint8_t has_dataflow;
  double codebleu;
} Nl2fixSimilarity;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until
 * the next call into this library on the same thread.
 */
const char *nl2fix_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void nl2fix_string_free(char *s);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum Nl2fixStatus nl2fix_pass_at_k(size_t n, size_t c, size_t k, double *out);

/**
 * One-sided exact (or normal-approximation) Wilcoxon signed-rank p-value
 * for x > y over `len` pairs.
 *
 * # Safety
 * `x` and `y` must point to `len` readable doubles; `p_value` must be valid for writes.
 */
enum Nl2fixStatus nl2fix_wilcoxon(const double *x, const double *y, size_t len, double *p_value);

/**
 * Character-level Levenshtein distance.
 *
 * # Safety
 * `a` and `b` must be NUL-terminated UTF-8; `out` must be valid for writes.
 */
enum Nl2fixStatus nl2fix_edit_distance(const char *a, const char *b, size_t *out);

/**
 * # Safety
 * `source` must be NUL-terminated UTF-8; `out` must be valid for writes.
 */
enum Nl2fixStatus nl2fix_strip_comments(const char *source, char **out);

/**
 * SHA-256 hex digest of the whitespace-free form of `code`.
 *
 * # Safety
 * `code` must be NUL-terminated UTF-8; `out` must be valid for writes.
 */
enum Nl2fixStatus nl2fix_content_hash(const char *code, char **out);

/**
 * CodeBLEU of `candidate` against `reference` with equal weights.
 *
 * # Safety
 * Both strings must be NUL-terminated UTF-8; `out` must be valid for writes.
 */
enum Nl2fixStatus nl2fix_codebleu(const char *candidate,
                                  const char *reference,
                                  struct Nl2fixSimilarity *out);

/**
 * Loads a JSON-lines corpus. Release the handle with [`nl2fix_corpus_free`].
 *
 * # Safety
 * `path` must be NUL-terminated UTF-8; `out` must be valid for writes.
 */
enum Nl2fixStatus nl2fix_corpus_load(const char *path, struct Nl2fixCorpus **out);

/**
 * Number of records, or 0 for a NULL handle.
 *
 * # Safety
 * `corpus` must be NULL or a live handle from [`nl2fix_corpus_load`].
 */
size_t nl2fix_corpus_len(const struct Nl2fixCorpus *corpus);

/**
 * Bug id of the record at `index`, in file order.
 *
 * # Safety
 * `corpus` must be a live handle; `out` must be valid for writes.
 */
enum Nl2fixStatus nl2fix_corpus_bug_id(const struct Nl2fixCorpus *corpus, size_t index, char **out);

/**
 * # Safety
 * `corpus` must be NULL or a handle from [`nl2fix_corpus_load`] not yet freed.
 */
void nl2fix_corpus_free(struct Nl2fixCorpus *corpus);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NL2FIX_H */

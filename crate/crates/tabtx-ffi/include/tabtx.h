/* C interface to the tabular-tx summarization toolkit. */

#ifndef TABTX_H
#define TABTX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code returned by every fallible entry point.
 */
typedef enum TabtxStatus {
  TABTX_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  TABTX_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  TABTX_STATUS_INVALID_UTF8 = 2,
  /**
   * Input could not be read or parsed (file, locale, record).
   */
  TABTX_STATUS_PARSE_ERROR = 3,
  /**
   * The document could not be preprocessed into records.
   */
  TABTX_STATUS_PREPROCESS_ERROR = 4,
  /**
   * An index was outside the corpus.
   */
  TABTX_STATUS_OUT_OF_BOUNDS = 5,
  /**
   * An internal invariant failed; see `tabtx_last_error`.
   */
  TABTX_STATUS_INTERNAL_ERROR = 6,
} TabtxStatus;

/**
 * A loaded corpus. Opaque: create with `tabtx_corpus_load`, inspect
 * through the accessor functions, release with `tabtx_corpus_free`.
 */
typedef struct TabtxCorpus TabtxCorpus;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, or null if none has
 * occurred. The pointer stays valid until the next failing call on the
 * same thread; do not free it.
 */
const char *tabtx_last_error(void);

/**
 * Release a string returned through an out parameter.
 *
 * # Safety
 * `s` must be null or a pointer previously returned by this library and
 * not yet freed.
 */
void tabtx_string_free(char *s);

/**
 * Load a corpus file (one table document JSON per line) and write a handle
 * to `out`.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum TabtxStatus tabtx_corpus_load(const char *path, struct TabtxCorpus **out);

/**
 * Number of documents in the corpus; 0 for a null handle.
 *
 * # Safety
 * `corpus` must be null or a live handle from `tabtx_corpus_load`.
 */
uintptr_t tabtx_corpus_len(const struct TabtxCorpus *corpus);

/**
 * Write the id of the document at `index` to `out`.
 *
 * # Safety
 * `corpus` must be a live handle and `out` a valid pointer.
 */
enum TabtxStatus tabtx_corpus_document_id(const struct TabtxCorpus *corpus,
                                          uintptr_t index,
                                          char **out);

/**
 * Preprocess the document at `index` (merged-cell expansion, header
 * inference, flattening, related-cell filtering) and write the retained
 * records as a JSON array to `out`.
 *
 * # Safety
 * `corpus` must be a live handle and `out` a valid pointer.
 */
enum TabtxStatus tabtx_preprocess_json(const struct TabtxCorpus *corpus,
                                       uintptr_t index,
                                       char **out);

/**
 * Release a corpus handle.
 *
 * # Safety
 * `corpus` must be null or a live handle not yet freed.
 */
void tabtx_corpus_free(struct TabtxCorpus *corpus);

/**
 * Score a candidate summary against a reference: ROUGE-1, ROUGE-L, and
 * BLEU, with the tokenizer chosen per the reference script.
 *
 * # Safety
 * All pointers must be valid; the strings nul-terminated.
 */
enum TabtxStatus tabtx_score(const char *candidate,
                             const char *reference,
                             double *rouge1,
                             double *rouge_l,
                             double *bleu);

/**
 * Parse `text` as a TX summary for `locale` ("en" or "ko") and write
 * whether it passes every structure check against `table_title`.
 *
 * # Safety
 * All pointers must be valid; the strings nul-terminated.
 */
enum TabtxStatus tabtx_validate_summary(const char *text,
                                        const char *table_title,
                                        const char *locale,
                                        bool *out_valid);

/**
 * Compose the Theme part for a table title in `locale` ("en" or "ko") and
 * write the rendered citation phrase to `out`.
 *
 * # Safety
 * All pointers must be valid; the strings nul-terminated.
 */
enum TabtxStatus tabtx_compose_theme(const char *table_title, const char *locale, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TABTX_H */

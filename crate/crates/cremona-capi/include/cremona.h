#ifndef CREMONA_H
#define CREMONA_H

/* Generated by cbindgen from cremona-capi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible entry point.
typedef enum CremonaStatus {
  // Success.
  CREMONA_STATUS_OK = 0,
  // A null pointer or malformed argument.
  CREMONA_STATUS_INVALID_ARGUMENT = 1,
  // The input was not valid JSON for the document schema.
  CREMONA_STATUS_PARSE_ERROR = 2,
  // The document violates a cluster or pair invariant.
  CREMONA_STATUS_VALIDATION_ERROR = 3,
  // An engine precondition failed.
  CREMONA_STATUS_ENGINE_ERROR = 4,
  // An internal invariant failed (or a panic was caught).
  CREMONA_STATUS_INTERNAL_ERROR = 5,
} CremonaStatus;

// Opaque handle to a parsed curve document.
typedef struct CremonaDocument CremonaDocument;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Last error message of the current thread; a static empty string when no
// error occurred. The pointer stays valid until the next failing call on
// the same thread.
const char *cremona_last_error(void);

// Engine version as a static string.
const char *cremona_version(void);

// Parse a JSON curve document into an opaque handle. On success the handle
// is written to `out` and must be freed with [`cremona_document_free`].
//
// # Safety
// `json` must be a valid NUL-terminated string, `out` a valid pointer.
enum CremonaStatus cremona_document_parse(const char *json, struct CremonaDocument **out);

// Release a document handle. Null is a no-op.
//
// # Safety
// `doc` must come from [`cremona_document_parse`] and not be freed twice.
void cremona_document_free(struct CremonaDocument *doc);

// Release a string returned by this library. Null is a no-op.
//
// # Safety
// `s` must come from this library and not be freed twice.
void cremona_string_free(char *s);

// The normalized document back as canonical JSON (useful for echoing the
// parsed input from bindings).
//
// # Safety
// Pointer contract as in [`cremona_genus`].
enum CremonaStatus cremona_document_echo(const struct CremonaDocument *doc, char **out);

// Combinatorial genus as a "p/q" string.
//
// # Safety
// `doc` from [`cremona_document_parse`]; `out` valid; result freed with
// [`cremona_string_free`].
enum CremonaStatus cremona_genus(const struct CremonaDocument *doc, char **out);

// Log discrepancies at coefficient `coeff` ("p/q"), as a JSON report.
//
// # Safety
// Pointer contract as in [`cremona_genus`]; `coeff` NUL-terminated.
enum CremonaStatus cremona_discrepancies(const struct CremonaDocument *doc,
                                         const char *coeff,
                                         char **out);

// Terminal/canonical classification at coefficient `coeff`; set `along_c0`
// to restrict the minimum to valuations centered on C0.
//
// # Safety
// Pointer contract as in [`cremona_discrepancies`].
enum CremonaStatus cremona_classify(const struct CremonaDocument *doc,
                                    const char *coeff,
                                    bool along_c0,
                                    char **out);

// Standard model (or enumeration when `enumerate_all` is set), as a JSON
// report with full traces.
//
// # Safety
// Pointer contract as in [`cremona_genus`].
enum CremonaStatus cremona_standard_model(const struct CremonaDocument *doc,
                                          bool enumerate_all,
                                          size_t branch_bound,
                                          char **out);

// Minimal-degree verdict (plane input) or minimal plane model (ruled input).
//
// # Safety
// Pointer contract as in [`cremona_genus`].
enum CremonaStatus cremona_minimal_degree(const struct CremonaDocument *doc,
                                          size_t branch_bound,
                                          char **out);

// Cremona equivalence to a line for a rational plane input.
//
// # Safety
// Pointer contract as in [`cremona_genus`].
enum CremonaStatus cremona_line_equivalence(const struct CremonaDocument *doc,
                                            int64_t max_class_degree,
                                            char **out);

// Noether-Fano certificate for embeddings of degrees d_high > d_low in P^n
// with the given multiplicity bound.
//
// # Safety
// `out` must be valid; result freed with [`cremona_string_free`].
enum CremonaStatus cremona_noether_fano(int64_t n,
                                        int64_t d_high,
                                        int64_t d_low,
                                        int64_t max_mult,
                                        char **out);

// Scroll case reduction trace for the given degree.
//
// # Safety
// `out` must be valid; result freed with [`cremona_string_free`].
enum CremonaStatus cremona_scroll_reduction(int64_t degree, char **out);

// Complete-intersection projection certificate for (a, b) in dimension k.
//
// # Safety
// `out` must be valid; result freed with [`cremona_string_free`].
enum CremonaStatus cremona_ci_certificate(int64_t a, int64_t b, int64_t k, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CREMONA_H */

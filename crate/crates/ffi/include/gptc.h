#ifndef GPTC_H
#define GPTC_H

/* Generated by cbindgen. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum GptcStatus {
  GPTC_STATUS_OK = 0,
  // A required pointer argument was null.
  GPTC_STATUS_NULL_POINTER = 1,
  // A string argument was not UTF-8.
  GPTC_STATUS_INVALID_UTF8 = 2,
  // The circuit text could not be parsed.
  GPTC_STATUS_PARSE_ERROR = 3,
  // The document parsed but is not a valid closed circuit.
  GPTC_STATUS_INVALID_CIRCUIT = 4,
  // Bad outcome assignment or foliation index.
  GPTC_STATUS_INVALID_ARGUMENT = 5,
  // Evaluation failed.
  GPTC_STATUS_EVALUATION_ERROR = 6,
  // A check ran and failed.
  GPTC_STATUS_CHECK_FAILED = 7,
  // An internal panic was caught.
  GPTC_STATUS_PANIC = 8,
} GptcStatus;

// A compiled circuit.
typedef struct GptcCircuit GptcCircuit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parse and compile a circuit from `.gptc` text or its JSON form.
//
// # Safety
// `source` must be a NUL-terminated string and `out` a valid pointer.
enum GptcStatus gptc_circuit_parse(const char *source, struct GptcCircuit **out);

// Release a circuit. Null is ignored.
//
// # Safety
// `circuit` must come from [`gptc_circuit_parse`] and not be used again.
void gptc_circuit_free(struct GptcCircuit *circuit);

// Check a document without keeping it: `Ok`, `ParseError` or
// `InvalidCircuit`.
//
// # Safety
// `source` must be a NUL-terminated string.
enum GptcStatus gptc_validate(const char *source);

// Probability of a joint outcome. `outcomes` is `op=token,...` or null for
// the document's default assignment. `foliation` selects the k-th
// enumerated complete foliation; pass a negative value for the canonical
// one.
//
// # Safety
// `circuit` must be a live handle, `outcomes` null or NUL-terminated, and
// `out` a valid pointer.
enum GptcStatus gptc_circuit_evaluate(const struct GptcCircuit *circuit,
                                      const char *outcomes,
                                      int64_t foliation,
                                      double *out);

// Number of complete foliations, counting at most `limit`.
//
// # Safety
// `circuit` must be a live handle and `out` a valid pointer.
enum GptcStatus gptc_circuit_foliation_count(const struct GptcCircuit *circuit,
                                             size_t limit,
                                             size_t *out);

// Canonical `.gptc` text (`json == false`) or the JSON form. Free the
// result with [`gptc_string_free`].
//
// # Safety
// `circuit` must be a live handle and `out` a valid pointer.
enum GptcStatus gptc_circuit_serialize(const struct GptcCircuit *circuit, bool json, char **out);

// Compare K_ab with K_a K_b for a counting model (`classical`, `quantum`,
// `real`, `quaternionic`). Returns `CheckFailed` when K_ab < K_a K_b; the
// outputs are filled either way. Output pointers may be null.
//
// # Safety
// `model` must be NUL-terminated; non-null outputs must be valid.
enum GptcStatus gptc_counting_check(const char *model,
                                    uint64_t n_a,
                                    uint64_t n_b,
                                    uint64_t *k_ab,
                                    uint64_t *k_a_k_b);

// Message for the last failed call on this thread; empty after a success.
// Valid until the next call into the library on the same thread.
const char *gptc_last_error(void);

// Free a string returned by the library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used again.
void gptc_string_free(char *s);

// Library version, static storage.
const char *gptc_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GPTC_H */

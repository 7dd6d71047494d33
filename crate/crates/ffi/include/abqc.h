#ifndef ABQC_H
#define ABQC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AbqcStatus {
  ABQC_STATUS_OK = 0,
  ABQC_STATUS_NULL_POINTER = 1,
  ABQC_STATUS_INVALID_UTF8 = 2,
  ABQC_STATUS_INVALID_ARGUMENT = 3,
  ABQC_STATUS_CONFIG = 4,
  ABQC_STATUS_CAPACITY_EXCEEDED = 5,
  ABQC_STATUS_IO = 6,
  ABQC_STATUS_PANIC = 7,
} AbqcStatus;

typedef enum AbqcVerdict {
  ABQC_VERDICT_ACCEPTED = 0,
  ABQC_VERDICT_BOB_CHEATING = 1,
  ABQC_VERDICT_ALICE_CHEATING = 2,
  ABQC_VERDICT_REJECTED = 3,
} AbqcVerdict;

/**
 * Opaque graph handle.
 */
typedef struct AbqcGraph AbqcGraph;

/**
 * Opaque transcript handle.
 */
typedef struct AbqcTranscript AbqcTranscript;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call into the library on this thread.
 */
const char *abqc_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void abqc_string_free(char *s);

/**
 * Builds a graph on `n` vertices from `edge_count` pairs stored flat in `edges`.
 *
 * # Safety
 * `edges` must point to `2 * edge_count` readable values (it may be null when
 * `edge_count` is 0) and `out` must be valid for a write.
 */
enum AbqcStatus abqc_graph_new(size_t n,
                               const size_t *edges,
                               size_t edge_count,
                               struct AbqcGraph **out);

/**
 * Parses the text format: vertex count on the first line, then one `u v` pair per line.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` valid for a write.
 */
enum AbqcStatus abqc_graph_parse(const char *text, struct AbqcGraph **out);

/**
 * # Safety
 * `g` must be a live graph handle and `out` valid for a write.
 */
enum AbqcStatus abqc_graph_vertex_count(const struct AbqcGraph *g, size_t *out);

/**
 * # Safety
 * `g` must be a live graph handle and `out` valid for a write.
 */
enum AbqcStatus abqc_graph_edge_count(const struct AbqcGraph *g, size_t *out);

/**
 * # Safety
 * `g` must be null or a handle from this library that has not been freed.
 */
void abqc_graph_free(struct AbqcGraph *g);

/**
 * Probability `(1 + F) / 2` that one test passes on a copy of fidelity `F`.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum AbqcStatus abqc_pass_probability(double fidelity, double *out);

/**
 * Maximiser and maximum of `2 x^k (1 - x)` on `[0, 1]`.
 *
 * # Safety
 * `argmax` and `value` must be valid for writes.
 */
enum AbqcStatus abqc_deviation_maximum(uint64_t k, double *argmax, double *value);

/**
 * # Safety
 * `out` must be valid for a write.
 */
enum AbqcStatus abqc_min_k(uint64_t n, uint64_t *out);

/**
 * # Safety
 * `out` must be valid for a write.
 */
enum AbqcStatus abqc_min_m(uint64_t n, uint64_t k, uint64_t *out);

/**
 * # Safety
 * `out` must be valid for a write.
 */
enum AbqcStatus abqc_definetti_term(uint64_t k, uint64_t n, uint64_t m, double *out);

/**
 * Total soundness error at `(n, k, m)` and whether it is at most `1 / n^2`.
 *
 * # Safety
 * `total` and `satisfied` must be valid for writes.
 */
enum AbqcStatus abqc_budget(uint64_t n, uint64_t k, uint64_t m, double *total, bool *satisfied);

/**
 * Runs one protocol execution described by a TOML experiment config.
 * `seed` replaces the config's master seed; relative paths resolve against
 * the working directory.
 *
 * # Safety
 * `config_toml` must be a NUL-terminated string and `out` valid for a write.
 */
enum AbqcStatus abqc_run_config(const char *config_toml,
                                uint64_t seed,
                                struct AbqcTranscript **out);

/**
 * Honest Bob and honest Alice in arbitrable mode on `g` with the given seed.
 * Parameters below the soundness constraints are accepted as a toy run.
 *
 * # Safety
 * `g` must be a live graph handle and `out` valid for a write.
 */
enum AbqcStatus abqc_run_honest(const struct AbqcGraph *g,
                                size_t k,
                                size_t m,
                                uint64_t seed,
                                struct AbqcTranscript **out);

/**
 * # Safety
 * `t` must be a live transcript handle and `out` valid for a write.
 */
enum AbqcStatus abqc_transcript_verdict(const struct AbqcTranscript *t, enum AbqcVerdict *out);

/**
 * Fidelity of the computation copy; fails when the run ended before Alice computed.
 *
 * # Safety
 * `t` must be a live transcript handle and `out` valid for a write.
 */
enum AbqcStatus abqc_transcript_instrumented_fidelity(const struct AbqcTranscript *t, double *out);

/**
 * Serialises the transcript; free the result with [`abqc_string_free`].
 *
 * # Safety
 * `t` must be a live transcript handle and `out` valid for a write.
 */
enum AbqcStatus abqc_transcript_to_json(const struct AbqcTranscript *t, char **out);

/**
 * # Safety
 * `t` must be null or a handle from this library that has not been freed.
 */
void abqc_transcript_free(struct AbqcTranscript *t);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ABQC_H */

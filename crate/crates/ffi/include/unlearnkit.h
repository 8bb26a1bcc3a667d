#ifndef UNLEARNKIT_H
#define UNLEARNKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum UkStatus {
  UK_STATUS_OK = 0,
  UK_STATUS_NULL_ARGUMENT = 1,
  UK_STATUS_INVALID_UTF8 = 2,
  UK_STATUS_INVALID_INPUT = 3,
  UK_STATUS_RESPONDER = 4,
  UK_STATUS_INVARIANT = 5,
  UK_STATUS_PANIC = 6,
} UkStatus;

/**
 * A mined or loaded memory graph.
 */
typedef struct UkGraph UkGraph;

/**
 * A synthetic responder backed by a ground-truth world.
 */
typedef struct UkOracle UkOracle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *uk_last_error(void);

/**
 * Library version as a static string.
 */
const char *uk_version(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void uk_string_free(char *s);

/**
 * Builds an oracle responder from a world description in JSON.
 *
 * # Safety
 * `world_json` must be a valid C string; `out` must be writable.
 */
enum UkStatus uk_oracle_new(const char *world_json, struct UkOracle **out);

/**
 * # Safety
 * `oracle` must be NULL or a handle from [`uk_oracle_new`], not yet freed.
 */
void uk_oracle_free(struct UkOracle *oracle);

/**
 * Mines the memory graph of `target` against an oracle. `mining_json` and
 * `description` may be NULL; `parallelism` 0 means 1.
 *
 * # Safety
 * Pointers must be valid for the duration of the call; `out` must be writable.
 */
enum UkStatus uk_mine(const struct UkOracle *oracle,
                      const char *target,
                      const char *description,
                      const char *mining_json,
                      size_t parallelism,
                      struct UkGraph **out);

/**
 * Parses and validates a graph document.
 *
 * # Safety
 * `json` must be a valid C string; `out` must be writable.
 */
enum UkStatus uk_graph_from_json(const char *json, struct UkGraph **out);

/**
 * Canonical JSON for a graph; free with [`uk_string_free`].
 *
 * # Safety
 * `graph` must be a live handle; `out` must be writable.
 */
enum UkStatus uk_graph_to_json(const struct UkGraph *graph, char **out);

/**
 * Number of nodes, target included; 0 for NULL.
 *
 * # Safety
 * `graph` must be NULL or a live handle.
 */
size_t uk_graph_node_count(const struct UkGraph *graph);

/**
 * Number of edges; 0 for NULL.
 *
 * # Safety
 * `graph` must be NULL or a live handle.
 */
size_t uk_graph_edge_count(const struct UkGraph *graph);

/**
 * # Safety
 * `graph` must be NULL or a handle from this library, not yet freed.
 */
void uk_graph_free(struct UkGraph *graph);

/**
 * Samples forget paths, then neighbor paths, and returns both as JSONL.
 * `sampling_json` may be NULL; `out_coverage` may be NULL.
 *
 * # Safety
 * `graph` must be a live handle; `out_jsonl` must be writable.
 */
enum UkStatus uk_sample_paths(const struct UkGraph *graph,
                              const char *sampling_json,
                              char **out_jsonl,
                              double *out_coverage);

/**
 * Builds forget and neighbor datasets (JSONL) from sampled paths.
 *
 * # Safety
 * Handles must be live; `paths_jsonl` a valid C string; outputs writable.
 */
enum UkStatus uk_synthesize(const struct UkGraph *graph,
                            const struct UkOracle *oracle,
                            const char *paths_jsonl,
                            size_t parallelism,
                            char **out_forget,
                            char **out_neighbor);

/**
 * Top-50 Jaccard and frequency cosine between two graphs.
 *
 * # Safety
 * Handles must be live; outputs writable.
 */
enum UkStatus uk_compare_graphs(const struct UkGraph *a,
                                const struct UkGraph *b,
                                double *out_jaccard,
                                double *out_cosine);

/**
 * ROUGE-L recall of `candidate` against `reference`.
 *
 * # Safety
 * Strings must be valid C strings; `out` writable.
 */
enum UkStatus uk_rouge_l_recall(const char *candidate, const char *reference, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UNLEARNKIT_H */

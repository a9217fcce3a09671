#ifndef EDSPARSE_H
#define EDSPARSE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum EdsStatus {
  EDS_STATUS_OK = 0,
  EDS_STATUS_NULL_ARGUMENT = 1,
  EDS_STATUS_INVALID_UTF8 = 2,
  EDS_STATUS_SYNTAX = 3,
  EDS_STATUS_INVALID_GRAPH = 4,
  EDS_STATUS_IO = 5,
  EDS_STATUS_MODEL = 6,
  EDS_STATUS_INVALID_ARGUMENT = 7,
  EDS_STATUS_PANIC = 8,
} EdsStatus;

/**
 * A parsed EDS graph.
 */
typedef struct EdsGraphHandle EdsGraphHandle;

/**
 * A trained two-stage parser.
 */
typedef struct EdsParserHandle EdsParserHandle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call into this library on the same thread.
 */
const char *eds_last_error(void);

/**
 * Parse one graph in the native text format.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum EdsStatus eds_graph_parse(const char *text, struct EdsGraphHandle **out);

/**
 * Serialize a graph in the native text format.
 *
 * # Safety
 * `graph` must come from this library; `out` must be a valid pointer.
 */
enum EdsStatus eds_graph_serialize(const struct EdsGraphHandle *graph, char **out);

/**
 * # Safety
 * `graph` must come from this library; `nodes` and `edges` must be valid.
 */
enum EdsStatus eds_graph_size(const struct EdsGraphHandle *graph, size_t *nodes, size_t *edges);

/**
 * Store 1 in `out` if the graph is weakly connected, 0 otherwise. Fails on
 * the empty graph.
 *
 * # Safety
 * `graph` must come from this library; `out` must be valid.
 */
enum EdsStatus eds_graph_is_connected(const struct EdsGraphHandle *graph, int *out);

/**
 * # Safety
 * `graph` must come from this library or be NULL; it must not be used
 * afterwards.
 */
void eds_graph_free(struct EdsGraphHandle *graph);

/**
 * Smatch precision, recall and F of `pred` against `gold` by hill climbing
 * with `restarts` starts (at least one) seeded by `seed`.
 *
 * # Safety
 * Handles must come from this library; output pointers must be valid.
 */
enum EdsStatus eds_smatch(const struct EdsGraphHandle *pred,
                          const struct EdsGraphHandle *gold,
                          size_t restarts,
                          uint64_t seed,
                          double *precision,
                          double *recall,
                          double *f);

/**
 * Load a model file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum EdsStatus eds_parser_load(const char *path, struct EdsParserHandle **out);

/**
 * Parse one sentence given as a block of the tokenized sentence format
 * (`#id`, `#text` and one tab-separated line per token). A nonzero
 * `connected` forces connected output.
 *
 * # Safety
 * `parser` must come from this library; `sentence` must be a
 * NUL-terminated string and `out` a valid pointer.
 */
enum EdsStatus eds_parser_parse(const struct EdsParserHandle *parser,
                                const char *sentence,
                                int connected,
                                struct EdsGraphHandle **out);

/**
 * # Safety
 * `parser` must come from this library or be NULL; it must not be used
 * afterwards.
 */
void eds_parser_free(struct EdsParserHandle *parser);

/**
 * # Safety
 * `s` must be a string returned by this library or NULL.
 */
void eds_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EDSPARSE_H */

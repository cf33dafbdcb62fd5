#ifndef HYBRIDQA_H
#define HYBRIDQA_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HqStatus {
  HQ_STATUS_OK = 0,
  HQ_STATUS_NULL_ARGUMENT = 1,
  HQ_STATUS_INVALID_UTF8 = 2,
  HQ_STATUS_INVALID_ARGUMENT = 3,
  HQ_STATUS_IO = 4,
  HQ_STATUS_CONFIG = 5,
  HQ_STATUS_INDEX = 6,
  HQ_STATUS_BACKEND = 7,
  HQ_STATUS_INTERNAL = 8,
} HqStatus;

/**
 * Opaque engine handle.
 */
typedef struct HqEngine HqEngine;

typedef struct HqRougeScore {
  double precision;
  double recall;
  double f1;
} HqRougeScore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Opens the index and backend described by a JSON configuration file.
 *
 * # Safety
 * `config_path` must be a NUL-terminated string; `out` must be writable.
 */
enum HqStatus hq_engine_open(const char *config_path, struct HqEngine **out);

/**
 * Answers one question. `mode` may be null (hybrid) or one of "hybrid",
 * "sparse", "dense", "none". On success `*out_json` receives
 * `{"answer", "sources": [{"chunk_id", "doc_id", "uri"}], "usage"}`.
 *
 * # Safety
 * `engine` must come from [`hq_engine_open`]; string arguments must be
 * NUL-terminated; `out_json` must be writable.
 */
enum HqStatus hq_engine_ask(const struct HqEngine *engine,
                            const char *question,
                            const char *mode,
                            bool adh,
                            char **out_json);

/**
 * ROUGE-Lsum of `candidate` against `reference`.
 *
 * # Safety
 * Both strings must be NUL-terminated; `out` must be writable.
 */
enum HqStatus hq_rouge_lsum(const char *reference, const char *candidate, struct HqRougeScore *out);

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next call into this library from the same thread.
 */
const char *hq_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed only once.
 */
void hq_string_free(char *s);

/**
 * # Safety
 * `engine` must be null or a handle from [`hq_engine_open`], freed only once.
 */
void hq_engine_free(struct HqEngine *engine);

/**
 * Library version as a static NUL-terminated string.
 */
const char *hq_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYBRIDQA_H */

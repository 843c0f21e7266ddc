/* Copyright 2026 The AsymRec Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C API of the AsymRec engine: a semantic-ID tokenizer (learned
 * projection + multi-subspace residual codebooks) and an asymmetric
 * generative recommender (continuous inputs, discrete code targets).
 *
 * All functions are thread-compatible: distinct handles may be used
 * from distinct threads; a single handle must not be mutated
 * concurrently. Functions returning int return ASYMREC_OK (0) on
 * success; on failure they return a nonzero asymrec_status and leave a
 * message retrievable with asymrec_last_error() on the calling thread.
 * Functions returning pointers return NULL on failure the same way.
 */

#ifndef ASYMREC_ASYMREC_H_
#define ASYMREC_ASYMREC_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(ASYMREC_BUILD)
#define ASYMREC_API __declspec(dllexport)
#else
#define ASYMREC_API __declspec(dllimport)
#endif
#else
#define ASYMREC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Nonzero values double as process exit codes at the CLI. */
typedef enum asymrec_status {
  ASYMREC_OK = 0,
  ASYMREC_ERROR_INTERNAL = 1, /* unexpected failure */
  ASYMREC_ERROR_USAGE = 2,    /* bad arguments or configuration */
  ASYMREC_ERROR_DATA = 3,     /* malformed or missing input data */
  ASYMREC_ERROR_NUMERIC = 4   /* numeric divergence */
} asymrec_status;

ASYMREC_API const char* asymrec_version(void);

/* Message from the most recent failing call on this thread; empty
 * string if no failure has occurred. The pointer stays valid until the
 * next failing call on the same thread. */
ASYMREC_API const char* asymrec_last_error(void);

/* ---- run configuration ------------------------------------------- */

/* Flat key = value configuration with built-in defaults. Unknown keys
 * are usage errors. */
typedef struct asymrec_config asymrec_config;

ASYMREC_API asymrec_config* asymrec_config_create(void);
ASYMREC_API void asymrec_config_destroy(asymrec_config* cfg);
/* Loads `key = value` lines ('#' comments allowed) over the defaults. */
ASYMREC_API int asymrec_config_load_file(asymrec_config* cfg,
                                         const char* path);
ASYMREC_API int asymrec_config_set(asymrec_config* cfg, const char* key,
                                   const char* value);
/* Copies the value into buf (NUL-terminated, truncated to buf_len). */
ASYMREC_API int asymrec_config_get(const asymrec_config* cfg, const char* key,
                                   char* buf, size_t buf_len);

/* ---- pipeline stages ----------------------------------------------
 * command is one of: "synth", "train-mhq", "assign", "train-rec",
 * "eval", "fuse", "spectrum". Inputs and outputs are taken from the
 * configuration; every stage writes a manifest next to its outputs. */
ASYMREC_API int asymrec_run(const asymrec_config* cfg, const char* command);

/* ---- embedding tables ---------------------------------------------- */

typedef struct asymrec_embeddings asymrec_embeddings;

ASYMREC_API asymrec_embeddings* asymrec_embeddings_open(const char* path);
ASYMREC_API void asymrec_embeddings_destroy(asymrec_embeddings* e);
ASYMREC_API size_t asymrec_embeddings_count(const asymrec_embeddings* e);
ASYMREC_API size_t asymrec_embeddings_dim(const asymrec_embeddings* e);
/* Copies item's embedding into out (len must equal the table dim). */
ASYMREC_API int asymrec_embeddings_row(const asymrec_embeddings* e,
                                       size_t item, double* out, size_t len);

/* ---- trained codebooks (semantic-ID tokenizer) --------------------- */

typedef struct asymrec_codebooks asymrec_codebooks;

ASYMREC_API asymrec_codebooks* asymrec_codebooks_open(const char* path);
ASYMREC_API void asymrec_codebooks_destroy(asymrec_codebooks* cb);
ASYMREC_API size_t asymrec_codebooks_code_len(const asymrec_codebooks* cb);
ASYMREC_API size_t asymrec_codebooks_input_dim(const asymrec_codebooks* cb);
/* Tokenizes one embedding into out_len == code_len() indices. */
ASYMREC_API int asymrec_codebooks_assign(const asymrec_codebooks* cb,
                                         const double* embedding, size_t dim,
                                         uint32_t* out_indices,
                                         size_t out_len);

/* ---- catalog + recommender ----------------------------------------- */

/* Embeddings plus (for discrete-head models) per-item codes. Pass
 * codes_path == NULL when the model regresses embeddings directly. */
typedef struct asymrec_catalog asymrec_catalog;

ASYMREC_API asymrec_catalog* asymrec_catalog_open(const char* embeddings_path,
                                                  const char* codes_path);
ASYMREC_API void asymrec_catalog_destroy(asymrec_catalog* c);
ASYMREC_API size_t asymrec_catalog_items(const asymrec_catalog* c);

typedef struct asymrec_model asymrec_model;

ASYMREC_API asymrec_model* asymrec_model_open(const char* checkpoint_path);
ASYMREC_API void asymrec_model_destroy(asymrec_model* m);

/* Scores the whole catalog against the interaction context (item ids,
 * oldest first) and writes the top k item ids and their scores. k must
 * not exceed the catalog size. */
ASYMREC_API int asymrec_recommend(const asymrec_model* m,
                                  const asymrec_catalog* c,
                                  const uint32_t* context_items,
                                  size_t context_len, uint32_t* out_items,
                                  double* out_scores, size_t k);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* ASYMREC_ASYMREC_H_ */

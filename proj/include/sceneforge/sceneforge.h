// Copyright 2026 The SceneForge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SCENEFORGE_SCENEFORGE_H_
#define SCENEFORGE_SCENEFORGE_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sf_status {
  SF_OK = 0,
  SF_ERR_DIMENSION = 1,
  SF_ERR_NUMERIC = 2,
  SF_ERR_CONTRACT = 3,
  SF_ERR_REGISTRY = 4,
  SF_ERR_PARSE = 5,
  SF_ERR_VALIDATION = 6,
  SF_ERR_FORMAT = 7,
  SF_ERR_TRUNCATION = 8,
  SF_ERR_VERSION = 9,
  SF_ERR_CONFIG = 10,
  SF_ERR_IO = 11,
  SF_ERR_INVALID_ARGUMENT = 12,
  SF_ERR_INTERNAL = 13
} sf_status;

typedef struct sf_dataset sf_dataset;
typedef struct sf_model sf_model;

const char* sf_version(void);
const char* sf_status_name(sf_status status);
/* Message of the last failure on the calling thread; "" after a success. */
const char* sf_last_error(void);
/* Nonzero when `status` means the caller's input was rejected (bad file,
   manifest, config or argument) rather than a failure while running. */
int sf_status_is_input_error(sf_status status);
/* Frees strings returned through char** out-parameters. */
void sf_free_string(char* s);

/* Levels follow spdlog: 0 trace, 1 debug, 2 info, 3 warn, 4 error, 5 critical. */
typedef void (*sf_log_fn)(int level, const char* message, void* user);
/* Routes library logging to `fn`; NULL restores stderr. */
void sf_set_log_callback(sf_log_fn fn, void* user);
/* 6 silences logging. */
void sf_set_log_level(int level);

/* Writes a synthetic corpus (manifest.jsonl, heldout.jsonl, kg.txt,
   generator.json, features/) into out_dir. */
sf_status sf_synth(const char* out_dir, uint64_t videos, uint64_t seed, double noise);

sf_status sf_dataset_open(const char* manifest_path, sf_dataset** out);
void sf_dataset_free(sf_dataset* dataset);
/* Records in `split` ("train", "val", "test"); NULL counts every record. */
size_t sf_dataset_size(const sf_dataset* dataset, const char* split);

typedef struct sf_train_options {
  const char* config;     /* preset name or config file; NULL means "synthetic" */
  const char* checkpoint; /* where the best model is written */
  uint64_t seed;
  int override_seed;      /* nonzero: use `seed` instead of the config's */
  int deterministic;      /* nonzero: single-threaded, bit-reproducible */
} sf_train_options;

/* Trains on the train split with early stopping on the val split. The
   report is JSON with per-epoch losses and validation F1. */
sf_status sf_train(const sf_dataset* dataset, const sf_train_options* options, char** report_json);

/* Rebuilds a model from a checkpoint; label embeddings come from the
   dataset's knowledge table, which the model copies. */
sf_status sf_model_load(const char* checkpoint_path, const sf_dataset* dataset, sf_model** out);
void sf_model_free(sf_model* model);

typedef struct sf_selection {
  int use_topk;     /* nonzero: keep the `topk` best labels */
  double threshold; /* otherwise keep labels scoring >= threshold */
  uint32_t topk;
} sf_selection;

/* Temporal-only scoring of `split` (NULL: every record). */
sf_status sf_eval(sf_model* model, const sf_dataset* dataset, const char* split, const sf_selection* selection,
                  char** report_text, char** report_json);
sf_status sf_infer(sf_model* model, const sf_dataset* dataset, const char* split, const sf_selection* selection,
                   const char* predictions_path, size_t* count);

/* Finite-difference check of the full objective on a two-video synthetic
   batch. `detail` (optional) describes the worst entry. */
sf_status sf_gradcheck(const char* config, uint64_t seed, double* max_error, char** detail);

/* Summary of a checkpoint, manifest or KFT1 file. */
sf_status sf_inspect(const char* path, char** summary);

#ifdef __cplusplus
}
#endif

#endif /* SCENEFORGE_SCENEFORGE_H_ */

// Copyright 2026 The superpol Authors.
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

/* C interface to the superpol library.
 *
 * Objects are opaque handles created and released by the library. Every
 * fallible call returns a superpol_status; on failure superpol_last_error()
 * describes the problem for the calling thread. Strings handed out by the
 * library are released with superpol_string_free.
 */
#ifndef SUPERPOL_SUPERPOL_H_
#define SUPERPOL_SUPERPOL_H_

#include <stddef.h>
#include <stdint.h>

#if defined(SUPERPOL_BUILDING_LIBRARY)
#define SUPERPOL_API __attribute__((visibility("default")))
#else
#define SUPERPOL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum superpol_status {
  SUPERPOL_OK = 0,
  SUPERPOL_INVALID_ARGUMENT = 1,
  SUPERPOL_IO = 2,
  SUPERPOL_NUMERIC = 3,
  SUPERPOL_DATA = 4,
  SUPERPOL_INTERNAL = 5
} superpol_status;

typedef struct superpol_options superpol_options;
typedef struct superpol_dataset superpol_dataset;
typedef struct superpol_model superpol_model;

typedef struct superpol_dataset_info {
  int sequential;  /* 1 for episodic data */
  size_t rows;
  int horizon;     /* 1 for bandit data */
  int num_actions;
  size_t s_cols;   /* bandit state, or per-step observation columns */
  size_t z_cols;   /* action proxy, or pre-decision observation columns */
  size_t w_cols;   /* reward proxy columns */
} superpol_dataset_info;

SUPERPOL_API const char* superpol_version(void);
SUPERPOL_API const char* superpol_last_error(void);
SUPERPOL_API const char* superpol_status_name(superpol_status status);
SUPERPOL_API void superpol_string_free(char* text);

/* Options are string key/value pairs; values are validated when used.
 * Keys: spec eps n seed horizon u_noise reward_scale noise_sd kind bridge
 * projection lambda mu U Delta mu_proj cv_folds bridge_grid projection_grid
 * reps jobs oracle episodes reference_samples oracle_seed train_fraction
 * splits config out. */
SUPERPOL_API superpol_status superpol_options_create(superpol_options** out);
SUPERPOL_API void superpol_options_free(superpol_options* options);
SUPERPOL_API superpol_status superpol_options_set(superpol_options* options,
                                                  const char* key, const char* value);
/* Value stored for key, or NULL. The pointer stays valid until the key is
 * set again or the options are freed. */
SUPERPOL_API const char* superpol_options_get(const superpol_options* options,
                                              const char* key);

/* Samples a dataset from the environment named by `spec`. */
SUPERPOL_API superpol_status superpol_generate(const superpol_options* options,
                                               superpol_dataset** out);
/* JSON description of the environment and sampling parameters. */
SUPERPOL_API superpol_status superpol_describe_spec(const superpol_options* options,
                                                    char** json);
SUPERPOL_API superpol_status superpol_dataset_load(const char* path,
                                                   superpol_dataset** out);
SUPERPOL_API superpol_status superpol_dataset_save(const superpol_dataset* data,
                                                   const char* path);
SUPERPOL_API superpol_status superpol_dataset_info_get(const superpol_dataset* data,
                                                       superpol_dataset_info* info);
SUPERPOL_API void superpol_dataset_free(superpol_dataset* data);

/* Learns a policy of class `kind` (default super for bandit data, superseq
 * for episodic data). */
SUPERPOL_API superpol_status superpol_fit(const superpol_dataset* data,
                                          const superpol_options* options,
                                          superpol_model** out);
SUPERPOL_API superpol_status superpol_model_act(const superpol_model* model,
                                                const double* s, size_t s_len,
                                                const double* z, size_t z_len,
                                                int recommended, int* action);
/* Step t is 1-based; observations hold o_1..o_t, own_actions t - 1 entries and
 * behavior_actions t entries. */
SUPERPOL_API superpol_status superpol_model_act_seq(const superpol_model* model, int t,
                                                    const double* observations,
                                                    size_t observations_len,
                                                    const int* own_actions,
                                                    const int* behavior_actions,
                                                    int* action);
/* Estimated value of the policy on a dataset with the model's own bridge. */
SUPERPOL_API superpol_status superpol_model_value(const superpol_model* model,
                                                  const superpol_dataset* data,
                                                  double* value);
/* Text dump of bridges and projections. */
SUPERPOL_API superpol_status superpol_model_dump(const superpol_model* model,
                                                 char** text);
/* Chosen actions on the first `rows` training rows as CSV. */
SUPERPOL_API superpol_status superpol_model_preview(const superpol_model* model,
                                                    size_t rows, char** csv);
SUPERPOL_API void superpol_model_free(superpol_model* model);

/* Random-split evaluation of bandit data. */
SUPERPOL_API superpol_status superpol_split_evaluate(const superpol_dataset* data,
                                                     const superpol_options* options,
                                                     char** csv, char** markdown);
/* Replicated regret experiment on a simulated environment. */
SUPERPOL_API superpol_status superpol_regret(const superpol_options* options,
                                             char** csv, char** markdown);
/* Runs a table config and writes its reports under option `out`. */
SUPERPOL_API superpol_status superpol_repro(const char* table,
                                            const superpol_options* options,
                                            void (*progress)(const char* line, void* user),
                                            void* user, char** summary);

/* Runs the fast invariant suite; `line` receives one line per check. */
SUPERPOL_API superpol_status superpol_selfcheck(void (*line)(const char* text, void* user),
                                                void* user, int* failures);

#ifdef __cplusplus
}
#endif

#endif /* SUPERPOL_SUPERPOL_H_ */

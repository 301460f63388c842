/* Copyright 2026 The fewpoint Authors
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

/* C interface to libfewpoint.
 *
 * Every function returns an fp_status. On failure the message of the last
 * error on the calling thread is available from fp_last_error_message()
 * until the next failing call on that thread. Handles are opaque and must be
 * released with their matching *_free function; passing NULL to a free
 * function is a no-op. Strings returned through char** are owned by the
 * caller and released with fp_string_free. */

#ifndef FEWPOINT_FEWPOINT_H_
#define FEWPOINT_FEWPOINT_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FP_API __declspec(dllexport)
#else
#define FP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fp_status {
  FP_OK = 0,
  FP_ERR_DIMENSION = 1,
  FP_ERR_DEGENERATE_INPUT = 2,
  FP_ERR_CONTRACT = 3,
  FP_ERR_PARSE = 4,
  FP_ERR_CAPABILITY = 5,
  FP_ERR_CONVERGENCE = 6,
  FP_ERR_IO = 7,
  FP_ERR_INTERNAL = 8,
  FP_ERR_NULL_ARGUMENT = 9
} fp_status;

FP_API const char* fp_status_name(fp_status status);
FP_API const char* fp_last_error_message(void);
FP_API const char* fp_version(void);
FP_API void fp_string_free(char* s);

/* ---- configuration ---------------------------------------------------- */

typedef struct fp_config fp_config;

/* The reduced-width desk configuration. */
FP_API fp_status fp_config_desk(fp_config** out);
/* Full-width defaults. */
FP_API fp_status fp_config_default(fp_config** out);
/* Reads "key = value" lines on top of the desk configuration. */
FP_API fp_status fp_config_load(const char* path, fp_config** out);
/* Reads "key = value" lines on top of an existing configuration. */
FP_API fp_status fp_config_apply_file(fp_config* config, const char* path);
/* The configuration stored in a checkpoint. */
FP_API fp_status fp_config_from_checkpoint(const char* checkpoint, fp_config** out);
/* Parses one value; consistency across keys is checked when a model is built
 * (fp_config_validate checks it early). */
FP_API fp_status fp_config_set(fp_config* config, const char* key, const char* value);
FP_API fp_status fp_config_validate(const fp_config* config);
/* Canonical text form, one "key = value" line per key. */
FP_API fp_status fp_config_to_text(const fp_config* config, char** out);
FP_API void fp_config_free(fp_config* config);

/* ---- point clouds ----------------------------------------------------- */

typedef struct fp_cloud fp_cloud;

/* Copies n points from xyz (3n doubles, x y z interleaved). */
FP_API fp_status fp_cloud_create(const double* xyz, size_t n, fp_cloud** out);
FP_API fp_status fp_cloud_read_xyz(const char* path, fp_cloud** out);
FP_API fp_status fp_cloud_write_xyz(const fp_cloud* cloud, const char* path);
FP_API size_t fp_cloud_size(const fp_cloud* cloud);
/* Interleaved coordinates, valid until the cloud is freed. */
FP_API const double* fp_cloud_data(const fp_cloud* cloud);
/* k points drawn without replacement using seed; k >= size copies. */
FP_API fp_status fp_cloud_subsample(const fp_cloud* cloud, size_t k, uint64_t seed,
                                    fp_cloud** out);
FP_API void fp_cloud_free(fp_cloud* cloud);

/* ---- dataset ---------------------------------------------------------- */

typedef struct fp_dataset_options {
  size_t classes;
  size_t train_per_class;
  size_t val_per_class;
  size_t test_per_class;
  size_t gt_points;
  size_t partial_points;
  uint64_t seed;
} fp_dataset_options;

FP_API void fp_dataset_options_default(fp_dataset_options* options);
/* Writes the XYZ tree and manifest under root; *manifest_path (optional)
 * receives the manifest file path. */
FP_API fp_status fp_generate_dataset(const char* root, const fp_dataset_options* options,
                                     char** manifest_path);

/* ---- training --------------------------------------------------------- */

typedef void (*fp_epoch_callback)(void* user, const char* variant, int stage, size_t epoch,
                                  double loss, double lr, double seconds);

typedef struct fp_train_request {
  const char* data;        /* dataset root */
  int stage;               /* 1, 2 or 3 */
  const fp_config* config; /* optional; architecture must match `resume` */
  const char* resume;      /* optional checkpoint */
  const char* out;         /* checkpoint to write */
  const char* log_csv;     /* optional per-epoch log */
  size_t max_epochs;       /* 0 runs the stage to completion */
  fp_epoch_callback on_epoch;
  void* user;
} fp_train_request;

FP_API fp_status fp_train(const fp_train_request* request, int* completed_stage);

/* ---- models ----------------------------------------------------------- */

typedef struct fp_model fp_model;

FP_API fp_status fp_model_load(const char* checkpoint, fp_model** out);
FP_API int fp_model_completed_stage(const fp_model* model);
FP_API size_t fp_model_detail_points(const fp_model* model);
/* Variant name ("pcn", "full", ...). */
FP_API fp_status fp_model_variant(const fp_model* model, char** out);
/* Detail cloud for a partial cloud. With normalize set, the input is
 * centred and scaled to the unit ball first and the output is mapped back
 * to the input's frame; otherwise the input is used as given. */
FP_API fp_status fp_model_complete(const fp_model* model, const fp_cloud* partial,
                                   int normalize, fp_cloud** out);
FP_API void fp_model_free(fp_model* model);

/* ---- evaluation ------------------------------------------------------- */

typedef struct fp_eval_options {
  const size_t* input_sizes; /* NULL selects {128, 16} */
  size_t n_input_sizes;
  uint64_t seed;
  double emd_epsilon;
  size_t threads; /* 0 reads FEWPOINT_THREADS */
} fp_eval_options;

FP_API void fp_eval_options_default(fp_eval_options* options);

typedef struct fp_report fp_report;

FP_API fp_status fp_eval(const char* checkpoint, const char* baseline_checkpoint,
                         const char* data, const fp_eval_options* options, fp_report** out);
/* Trains the five ablation variants through all three stages and evaluates
 * them against the baseline; writes checkpoints, logs and reports to out_dir. */
FP_API fp_status fp_ablate(const char* data, const fp_config* config, const char* out_dir,
                           const fp_eval_options* options, fp_epoch_callback on_epoch,
                           void* user, fp_report** out);

FP_API fp_status fp_report_read(const char* path, fp_report** out);
FP_API fp_status fp_report_write(const fp_report* report, const char* path);
FP_API fp_status fp_report_to_csv(const fp_report* report, char** out);
/* Reduction and means tables for every input size. */
FP_API fp_status fp_report_tables(const fp_report* report, char** out);
FP_API void fp_report_free(fp_report* report);

#ifdef __cplusplus
}
#endif

#endif /* FEWPOINT_FEWPOINT_H_ */

// Copyright 2026 The fewpoint Authors
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

#include "fewpoint/fewpoint.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "fewpoint/config.hpp"
#include "fewpoint/dataset.hpp"
#include "fewpoint/errors.hpp"
#include "fewpoint/pipeline.hpp"
#include "fewpoint/pointcloud.hpp"
#include "fewpoint/report.hpp"

struct fp_config {
  fewpoint::Config config;
};

struct fp_cloud {
  fewpoint::PointCloud cloud;
  std::vector<double> flat;

  void sync() {
    flat.clear();
    flat.reserve(cloud.size() * 3);
    for (const auto& p : cloud.points()) flat.insert(flat.end(), p.begin(), p.end());
  }
};

struct fp_model {
  fewpoint::Checkpoint checkpoint;
};

struct fp_report {
  fewpoint::MetricsReport report;
};

namespace {

thread_local std::string g_last_error;

fp_status fail(fp_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs f, translating library exceptions into status codes.
template <typename F>
fp_status guarded(F&& f) {
  try {
    f();
    return FP_OK;
  } catch (const fewpoint::DimensionError& e) {
    return fail(FP_ERR_DIMENSION, e.what());
  } catch (const fewpoint::DegenerateInputError& e) {
    return fail(FP_ERR_DEGENERATE_INPUT, e.what());
  } catch (const fewpoint::ContractError& e) {
    return fail(FP_ERR_CONTRACT, e.what());
  } catch (const fewpoint::ParseError& e) {
    return fail(FP_ERR_PARSE, e.what());
  } catch (const fewpoint::CapabilityError& e) {
    return fail(FP_ERR_CAPABILITY, e.what());
  } catch (const fewpoint::ConvergenceError& e) {
    return fail(FP_ERR_CONVERGENCE, e.what());
  } catch (const fewpoint::IoError& e) {
    return fail(FP_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(FP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(FP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(FP_ERR_INTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

#define FP_REQUIRE(ptr)                                                    \
  do {                                                                     \
    if (!(ptr)) return fail(FP_ERR_NULL_ARGUMENT, #ptr " must not be NULL"); \
  } while (0)

fewpoint::EvalOptions eval_options(const fp_eval_options* o) {
  fewpoint::EvalOptions out;
  if (!o) return out;
  if (o->input_sizes && o->n_input_sizes) {
    out.input_sizes.assign(o->input_sizes, o->input_sizes + o->n_input_sizes);
  }
  out.seed = o->seed;
  out.emd_epsilon = o->emd_epsilon;
  out.threads = o->threads;
  return out;
}

std::unique_ptr<fp_cloud> wrap(fewpoint::PointCloud c) {
  auto out = std::make_unique<fp_cloud>();
  out->cloud = std::move(c);
  out->sync();
  return out;
}

}  // namespace

extern "C" {

const char* fp_status_name(fp_status status) {
  switch (status) {
    case FP_OK: return "ok";
    case FP_ERR_DIMENSION: return "dimension error";
    case FP_ERR_DEGENERATE_INPUT: return "degenerate input";
    case FP_ERR_CONTRACT: return "contract error";
    case FP_ERR_PARSE: return "parse error";
    case FP_ERR_CAPABILITY: return "capability error";
    case FP_ERR_CONVERGENCE: return "convergence error";
    case FP_ERR_IO: return "i/o error";
    case FP_ERR_INTERNAL: return "internal error";
    case FP_ERR_NULL_ARGUMENT: return "null argument";
  }
  return "unknown status";
}

const char* fp_last_error_message(void) { return g_last_error.c_str(); }

const char* fp_version(void) { return "1.0.0"; }

void fp_string_free(char* s) { std::free(s); }

fp_status fp_config_desk(fp_config** out) {
  FP_REQUIRE(out);
  return guarded([&] { *out = new fp_config{fewpoint::desk_config()}; });
}

fp_status fp_config_default(fp_config** out) {
  FP_REQUIRE(out);
  return guarded([&] { *out = new fp_config{fewpoint::Config()}; });
}

fp_status fp_config_load(const char* path, fp_config** out) {
  FP_REQUIRE(path);
  FP_REQUIRE(out);
  return guarded([&] {
    *out = new fp_config{fewpoint::Config::from_file(path, fewpoint::desk_config())};
  });
}

fp_status fp_config_apply_file(fp_config* config, const char* path) {
  FP_REQUIRE(config);
  FP_REQUIRE(path);
  return guarded([&] {
    config->config = fewpoint::Config::from_file(path, config->config);
  });
}

fp_status fp_config_from_checkpoint(const char* checkpoint, fp_config** out) {
  FP_REQUIRE(checkpoint);
  FP_REQUIRE(out);
  return guarded([&] {
    const fewpoint::Checkpoint c = fewpoint::load_checkpoint(checkpoint);
    *out = new fp_config{c.model->config()};
  });
}

fp_status fp_config_set(fp_config* config, const char* key, const char* value) {
  FP_REQUIRE(config);
  FP_REQUIRE(key);
  FP_REQUIRE(value);
  // Parsed only: intermediate combinations may be inconsistent, and the
  // model validates the whole configuration when it is built.
  return guarded([&] { config->config.set(key, value); });
}

fp_status fp_config_validate(const fp_config* config) {
  FP_REQUIRE(config);
  return guarded([&] { config->config.validate(); });
}

fp_status fp_config_to_text(const fp_config* config, char** out) {
  FP_REQUIRE(config);
  FP_REQUIRE(out);
  return guarded([&] { *out = dup_string(config->config.to_text()); });
}

void fp_config_free(fp_config* config) { delete config; }

fp_status fp_cloud_create(const double* xyz, size_t n, fp_cloud** out) {
  FP_REQUIRE(out);
  if (n) FP_REQUIRE(xyz);
  return guarded([&] {
    std::vector<fewpoint::Vec3> p(n);
    for (size_t i = 0; i < n; ++i) p[i] = {xyz[3 * i], xyz[3 * i + 1], xyz[3 * i + 2]};
    *out = wrap(fewpoint::PointCloud(std::move(p))).release();
  });
}

fp_status fp_cloud_read_xyz(const char* path, fp_cloud** out) {
  FP_REQUIRE(path);
  FP_REQUIRE(out);
  return guarded([&] { *out = wrap(fewpoint::read_xyz(path)).release(); });
}

fp_status fp_cloud_write_xyz(const fp_cloud* cloud, const char* path) {
  FP_REQUIRE(cloud);
  FP_REQUIRE(path);
  return guarded([&] { fewpoint::write_xyz(cloud->cloud, path); });
}

size_t fp_cloud_size(const fp_cloud* cloud) { return cloud ? cloud->cloud.size() : 0; }

const double* fp_cloud_data(const fp_cloud* cloud) {
  return cloud && !cloud->flat.empty() ? cloud->flat.data() : nullptr;
}

fp_status fp_cloud_subsample(const fp_cloud* cloud, size_t k, uint64_t seed, fp_cloud** out) {
  FP_REQUIRE(cloud);
  FP_REQUIRE(out);
  return guarded([&] {
    if (k >= cloud->cloud.size()) {
      *out = wrap(cloud->cloud).release();
    } else {
      *out = wrap(fewpoint::random_subsample(cloud->cloud, k, seed)).release();
    }
  });
}

void fp_cloud_free(fp_cloud* cloud) { delete cloud; }

void fp_dataset_options_default(fp_dataset_options* options) {
  if (!options) return;
  const fewpoint::DatasetConfig d;
  options->classes = d.classes;
  options->train_per_class = d.train_per_class;
  options->val_per_class = d.val_per_class;
  options->test_per_class = d.test_per_class;
  options->gt_points = d.gt_points;
  options->partial_points = d.partial_points;
  options->seed = d.seed;
}

fp_status fp_generate_dataset(const char* root, const fp_dataset_options* options,
                              char** manifest_path) {
  FP_REQUIRE(root);
  return guarded([&] {
    fewpoint::DatasetConfig d;
    d.root = root;
    if (options) {
      d.classes = options->classes;
      d.train_per_class = options->train_per_class;
      d.val_per_class = options->val_per_class;
      d.test_per_class = options->test_per_class;
      d.gt_points = options->gt_points;
      d.partial_points = options->partial_points;
      d.seed = options->seed;
    }
    const fewpoint::DatasetManifest m = fewpoint::build_dataset(d);
    if (manifest_path) *manifest_path = dup_string((m.root / fewpoint::kManifestName).string());
  });
}

fp_status fp_train(const fp_train_request* request, int* completed_stage) {
  FP_REQUIRE(request);
  FP_REQUIRE(request->data);
  FP_REQUIRE(request->out);
  return guarded([&] {
    fewpoint::TrainRequest r;
    r.data = request->data;
    r.stage = request->stage;
    if (request->config) r.config = request->config->config;
    if (request->resume) r.resume = request->resume;
    r.out = request->out;
    if (request->log_csv) r.log_csv = request->log_csv;
    if (request->max_epochs) r.max_epochs = request->max_epochs;
    if (request->on_epoch) {
      r.on_epoch = [request](const fewpoint::EpochLog& e) {
        request->on_epoch(request->user, "", e.stage, e.epoch, e.loss, e.lr, e.seconds);
      };
    }
    const fewpoint::TrainOutcome o = fewpoint::run_train(r);
    if (completed_stage) *completed_stage = o.completed_stage;
  });
}

fp_status fp_model_load(const char* checkpoint, fp_model** out) {
  FP_REQUIRE(checkpoint);
  FP_REQUIRE(out);
  return guarded([&] {
    auto m = std::make_unique<fp_model>();
    m->checkpoint = fewpoint::load_checkpoint(checkpoint);
    *out = m.release();
  });
}

int fp_model_completed_stage(const fp_model* model) {
  return model ? model->checkpoint.model->completed_stage() : -1;
}

size_t fp_model_detail_points(const fp_model* model) {
  return model ? model->checkpoint.model->config().decoder.detail_n() : 0;
}

fp_status fp_model_variant(const fp_model* model, char** out) {
  FP_REQUIRE(model);
  FP_REQUIRE(out);
  return guarded(
      [&] { *out = dup_string(fewpoint::variant_name(model->checkpoint.model->config())); });
}

fp_status fp_model_complete(const fp_model* model, const fp_cloud* partial, int normalize,
                            fp_cloud** out) {
  FP_REQUIRE(model);
  FP_REQUIRE(partial);
  FP_REQUIRE(out);
  return guarded([&] {
    if (!partial->cloud.all_finite()) {
      throw fewpoint::DegenerateInputError("complete: input has non-finite coordinates");
    }
    fewpoint::Normalization frame;
    fewpoint::PointCloud input = partial->cloud;
    if (normalize) {
      fewpoint::NormalizedCloud n = fewpoint::normalize(input);
      input = std::move(n.cloud);
      frame = n.transform;
    }
    const fewpoint::DecodedClouds d = model->checkpoint.model->complete(input);
    fewpoint::PointCloud detail = fewpoint::PointCloud::from_tensor(d.detail);
    if (normalize) detail = frame.invert(detail);
    if (!detail.all_finite()) {
      throw fewpoint::ConvergenceError("complete: the model produced non-finite coordinates");
    }
    *out = wrap(std::move(detail)).release();
  });
}

void fp_model_free(fp_model* model) { delete model; }

void fp_eval_options_default(fp_eval_options* options) {
  if (!options) return;
  const fewpoint::EvalOptions d;
  options->input_sizes = nullptr;
  options->n_input_sizes = 0;
  options->seed = d.seed;
  options->emd_epsilon = d.emd_epsilon;
  options->threads = d.threads;
}

fp_status fp_eval(const char* checkpoint, const char* baseline_checkpoint, const char* data,
                  const fp_eval_options* options, fp_report** out) {
  FP_REQUIRE(checkpoint);
  FP_REQUIRE(baseline_checkpoint);
  FP_REQUIRE(data);
  FP_REQUIRE(out);
  return guarded([&] {
    *out = new fp_report{
        fewpoint::run_eval(checkpoint, baseline_checkpoint, data, eval_options(options))};
  });
}

fp_status fp_ablate(const char* data, const fp_config* config, const char* out_dir,
                    const fp_eval_options* options, fp_epoch_callback on_epoch, void* user,
                    fp_report** out) {
  FP_REQUIRE(data);
  FP_REQUIRE(out_dir);
  return guarded([&] {
    fewpoint::AblationOptions o;
    o.eval = eval_options(options);
    if (on_epoch) {
      o.on_epoch = [on_epoch, user](const std::string& v, const fewpoint::EpochLog& e) {
        on_epoch(user, v.c_str(), e.stage, e.epoch, e.loss, e.lr, e.seconds);
      };
    }
    const fewpoint::Config base = config ? config->config : fewpoint::desk_config();
    fewpoint::AblationOutcome r = fewpoint::run_ablation(data, base, out_dir, o);
    if (out) *out = new fp_report{std::move(r.report)};
  });
}

fp_status fp_report_read(const char* path, fp_report** out) {
  FP_REQUIRE(path);
  FP_REQUIRE(out);
  return guarded([&] { *out = new fp_report{fewpoint::MetricsReport::read(path)}; });
}

fp_status fp_report_write(const fp_report* report, const char* path) {
  FP_REQUIRE(report);
  FP_REQUIRE(path);
  return guarded([&] { report->report.write(path); });
}

fp_status fp_report_to_csv(const fp_report* report, char** out) {
  FP_REQUIRE(report);
  FP_REQUIRE(out);
  return guarded([&] { *out = dup_string(report->report.to_csv()); });
}

fp_status fp_report_tables(const fp_report* report, char** out) {
  FP_REQUIRE(report);
  FP_REQUIRE(out);
  return guarded([&] {
    std::string title;
    for (const auto& v : report->report.variants()) {
      if (v == report->report.baseline) continue;
      title += (title.empty() ? "" : ", ") + v;
    }
    std::string text;
    for (std::size_t size : report->report.input_sizes()) {
      text += fewpoint::format_reduction_table(report->report, size, title) + "\n" +
              fewpoint::format_means_table(report->report, size) + "\n";
    }
    *out = dup_string(text);
  });
}

void fp_report_free(fp_report* report) { delete report; }

}  // extern "C"

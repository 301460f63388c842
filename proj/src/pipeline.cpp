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

#include "fewpoint/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <memory>

#include "fewpoint/dataset.hpp"
#include "fewpoint/errors.hpp"

namespace fewpoint {

namespace {

std::vector<std::string> classes_of(const TrainingSet& set) {
  std::vector<std::string> out;
  for (const auto& s : set)
    if (std::find(out.begin(), out.end(), s.class_label) == out.end()) {
      out.push_back(s.class_label);
    }
  return out;
}

void write_log(const std::filesystem::path& path, const std::vector<EpochLog>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write training log " + path.string());
  out << epoch_log_header() << "\n";
  for (const auto& r : rows) out << epoch_log_row(r) << "\n";
  if (!out) throw IoError("write failed for " + path.string());
}

void require_same_architecture(const Config& ckpt, const Config& requested) {
  const auto a = ckpt.to_entries();
  const auto b = requested.to_entries();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].first.rfind("train.", 0) == 0) continue;
    if (a[i].second != b[i].second) {
      throw ContractError("config key '" + a[i].first + "' = " + b[i].second +
                          " does not match the checkpoint's " + a[i].second +
                          "; only train.* keys may change on resume");
    }
  }
}

}  // namespace

const std::vector<std::string>& ablation_variants() {
  static const std::vector<std::string> v{"pcn", "pcn+pointnet++", "pcn+transformer",
                                          "pcn+wgan", "full"};
  return v;
}

Config variant_config(const Config& base, const std::string& variant) {
  Config c = base;
  c.encoder.use_transformer_branch = variant == "pcn+transformer" || variant == "full";
  c.decoder.use_pointnetpp_local = variant == "pcn+pointnet++" || variant == "full";
  c.gan.use_wgan = variant == "pcn+wgan" || variant == "full";
  if (std::find(ablation_variants().begin(), ablation_variants().end(), variant) ==
      ablation_variants().end()) {
    throw ContractError("unknown variant '" + variant + "'");
  }
  return c;
}

std::string variant_slug(const std::string& variant) {
  std::string s;
  for (char c : variant) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      s.push_back(c);
    } else if (c == '+') {
      s.push_back('_');
    }
  }
  return s;
}

TrainOutcome run_train(const TrainRequest& request) {
  if (request.stage < 1 || request.stage > 3) {
    throw ContractError("stage must be 1, 2 or 3, got " + std::to_string(request.stage));
  }
  std::unique_ptr<Model> model;
  TrainState state;
  if (request.resume) {
    Checkpoint ck = load_checkpoint(*request.resume);
    model = std::move(ck.model);
    state = ck.state;
    if (request.config) {
      require_same_architecture(model->config(), *request.config);
      model->set_train_config(request.config->train);
    }
  } else {
    if (request.stage != 1) {
      throw ContractError("stage " + std::to_string(request.stage) +
                          " needs a checkpoint that completed stage " +
                          std::to_string(request.stage - 1) + " (pass --resume)");
    }
    model = std::make_unique<Model>(request.config.value_or(desk_config()));
  }
  const DatasetManifest manifest = read_manifest(request.data);
  const TrainingSet data = load_split(manifest, "train", model->config().decoder.coarse_n);

  TrainOutcome outcome;
  StageOptions options;
  options.max_epochs = request.max_epochs;
  options.on_epoch = [&](const EpochLog& log) {
    outcome.log.push_back(log);
    if (request.on_epoch) request.on_epoch(log);
  };
  train_stage(*model, state, request.stage, data, options);
  outcome.completed_stage = model->completed_stage();
  outcome.epochs_run = outcome.log.size();
  save_checkpoint(*model, state, request.out);
  if (request.log_csv) write_log(*request.log_csv, outcome.log);
  return outcome;
}

MetricsReport run_eval(const Model& model, const Model& baseline, const TrainingSet& test,
                       const EvalOptions& options) {
  const std::string name = variant_name(model.config());
  const std::string base_name = "baseline:" + variant_name(baseline.config());
  std::vector<VariantMetrics> v;
  v.push_back({name, evaluate_model(model, test, options)});
  v.push_back({base_name, evaluate_model(baseline, test, options)});
  return build_report(v, base_name, classes_of(test), options.emd_epsilon);
}

MetricsReport run_eval(const std::filesystem::path& ckpt,
                       const std::filesystem::path& baseline_ckpt,
                       const std::filesystem::path& data, const EvalOptions& options) {
  const Checkpoint model = load_checkpoint(ckpt);
  const Checkpoint baseline = load_checkpoint(baseline_ckpt);
  if (model.model->config().decoder.detail_n() != baseline.model->config().decoder.detail_n()) {
    throw ContractError("eval: the two checkpoints produce different output sizes");
  }
  const DatasetManifest manifest = read_manifest(data);
  const TrainingSet test = load_split(manifest, "test", model.model->config().decoder.coarse_n);
  return run_eval(*model.model, *baseline.model, test, options);
}

AblationOutcome run_ablation(const std::filesystem::path& data, const Config& base,
                             const std::filesystem::path& out_dir,
                             const AblationOptions& options) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  const DatasetManifest manifest = read_manifest(data);
  const TrainingSet train = load_split(manifest, "train", base.decoder.coarse_n);
  const TrainingSet test = load_split(manifest, "test", base.decoder.coarse_n);

  AblationOutcome outcome;
  std::vector<VariantMetrics> results;
  for (const auto& v : ablation_variants()) {
    Model model(variant_config(base, v));
    TrainState state;
    std::vector<EpochLog> log;
    StageOptions stage_options;
    stage_options.on_epoch = [&](const EpochLog& e) {
      log.push_back(e);
      if (options.on_epoch) options.on_epoch(v, e);
    };
    std::filesystem::path last;
    for (int stage = 1; stage <= 3; ++stage) {
      train_stage(model, state, stage, train, stage_options);
      last = out_dir / (variant_slug(v) + "_stage" + std::to_string(stage) + ".ckpt");
      save_checkpoint(model, state, last);
    }
    write_log(out_dir / (variant_slug(v) + "_train.csv"), log);
    outcome.checkpoints.push_back(last);
    results.push_back({v, evaluate_model(model, test, options.eval)});
  }
  outcome.report = build_report(results, "pcn", classes_of(test), options.eval.emd_epsilon);
  outcome.report.write((out_dir / "ablation.csv").string());

  std::ofstream txt(out_dir / "ablation.txt", std::ios::binary);
  if (!txt) throw IoError("cannot write " + (out_dir / "ablation.txt").string());
  for (std::size_t size : outcome.report.input_sizes()) {
    txt << format_reduction_table(outcome.report, size, "Ablation") << "\n"
        << format_means_table(outcome.report, size) << "\n";
  }
  return outcome;
}

}  // namespace fewpoint

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

#ifndef FEWPOINT_PIPELINE_HPP_
#define FEWPOINT_PIPELINE_HPP_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fewpoint/checkpoint.hpp"
#include "fewpoint/config.hpp"
#include "fewpoint/report.hpp"
#include "fewpoint/trainer.hpp"

namespace fewpoint {

// The five ablation variants in table order, baseline first.
const std::vector<std::string>& ablation_variants();
// `base` with the three module flags set for the named variant.
Config variant_config(const Config& base, const std::string& variant);

struct TrainRequest {
  std::filesystem::path data;
  int stage = 1;
  // Used for a fresh stage-1 model; with `resume`, only its training keys
  // apply and the architecture must match the checkpoint.
  std::optional<Config> config;
  std::optional<std::filesystem::path> resume;
  std::filesystem::path out;
  std::optional<std::filesystem::path> log_csv;
  std::optional<std::size_t> max_epochs;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainOutcome {
  int completed_stage = 0;
  std::size_t epochs_run = 0;
  std::vector<EpochLog> log;
};

TrainOutcome run_train(const TrainRequest& request);

// Evaluates `model` and `baseline` on the test split and reports the
// model's rates against the baseline. The baseline row label is
// "baseline:<variant>".
MetricsReport run_eval(const Model& model, const Model& baseline, const TrainingSet& test,
                       const EvalOptions& options);
MetricsReport run_eval(const std::filesystem::path& ckpt,
                       const std::filesystem::path& baseline_ckpt,
                       const std::filesystem::path& data, const EvalOptions& options);

struct AblationOptions {
  EvalOptions eval;
  std::function<void(const std::string& variant, const EpochLog&)> on_epoch;
};

struct AblationOutcome {
  MetricsReport report;
  std::vector<std::filesystem::path> checkpoints;  // final checkpoint per variant
};

// Trains every ablation variant through stages 1-3 from `base` under one
// seed, evaluates all of them against "pcn", and writes into out_dir:
// <variant>_stage{1,2,3}.ckpt, <variant>_train.csv, ablation.csv and
// ablation.txt (one table per input size).
AblationOutcome run_ablation(const std::filesystem::path& data, const Config& base,
                             const std::filesystem::path& out_dir,
                             const AblationOptions& options = {});

// File-system-safe form of a variant name ("pcn+wgan" -> "pcn_wgan").
std::string variant_slug(const std::string& variant);

}  // namespace fewpoint

#endif  // FEWPOINT_PIPELINE_HPP_

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

#ifndef FEWPOINT_TRAINER_HPP_
#define FEWPOINT_TRAINER_HPP_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fewpoint/checkpoint.hpp"
#include "fewpoint/config.hpp"
#include "fewpoint/dataset.hpp"
#include "fewpoint/model.hpp"
#include "fewpoint/pointcloud.hpp"

namespace fewpoint {

struct TrainingSample {
  std::string sample_id;
  std::string class_label;
  PointCloud gt_cloud;
  Tensor gt;         // [n_gt, 3]
  Tensor gt_coarse;  // farthest-point subsample of gt to coarse_n points
  std::vector<PointCloud> view_clouds;
  std::vector<Tensor> views;  // [n_partial, 3] each
};

using TrainingSet = std::vector<TrainingSample>;

TrainingSample make_training_sample(const SamplePair& pair, std::size_t coarse_n);
TrainingSample make_training_sample(std::string sample_id, std::string class_label,
                                    const PointCloud& gt, const std::vector<PointCloud>& views,
                                    std::size_t coarse_n);
// Loads one manifest split, in manifest order.
TrainingSet load_split(const DatasetManifest& manifest, const std::string& split,
                       std::size_t coarse_n);

Tensor distance_loss(DistanceKind kind, const Tensor& a, const Tensor& b,
                     const TrainConfig& train);

// d1(coarse, gt_coarse) + alpha * d2(detail, gt).
Tensor completion_loss(const Tensor& coarse, const Tensor& detail, const Tensor& gt_coarse,
                       const Tensor& gt, double alpha, const TrainConfig& train);

struct EpochLog {
  int stage = 0;
  std::size_t epoch = 0;  // 0-based index within the stage
  double loss = 0.0;      // mean per-sample training loss
  double lr = 0.0;
  double seconds = 0.0;
};

struct StageOptions {
  // Stop after this many epochs in this call, leaving a resumable state.
  std::optional<std::size_t> max_epochs;
  std::function<void(const EpochLog&)> on_epoch;
  // Called around every optimizer update (after = false before its
  // backward, true after its step) with the optimizer's name.
  std::function<void(const std::string& optimizer, bool after)> on_update;
};

// Runs or resumes one stage of the three-stage protocol.
//   1: encoder + decoder on the completion loss, WGAN bypassed.
//   2: WGAN-GP on frozen-encoder features (no-op for variants without WGAN).
//   3: encoder -> generator -> decoder on the completion loss plus the
//      feature L1 anchor, discriminator frozen unless configured otherwise.
// Stage order is enforced from model.completed_stage() and state.
void train_stage(Model& model, TrainState& state, int stage, const TrainingSet& data,
                 const StageOptions& options = {});

// Suggested optimizer group names inside a TrainState.
inline constexpr const char* kMainOptimizer = "main";
inline constexpr const char* kCriticOptimizer = "critic";
inline constexpr const char* kGeneratorOptimizer = "generator";

std::string epoch_log_header();
std::string epoch_log_row(const EpochLog& log);

}  // namespace fewpoint

#endif  // FEWPOINT_TRAINER_HPP_

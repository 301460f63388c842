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

#ifndef FEWPOINT_OPTIM_HPP_
#define FEWPOINT_OPTIM_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fewpoint/config.hpp"
#include "fewpoint/tensor.hpp"

namespace fewpoint {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Round parameters and moments to binary32 after each update.
  bool f32_storage = false;
};

AdamConfig adam_config(const TrainConfig& train);

struct AdamMoments {
  std::vector<double> m, v;
};

// One Adam update with bias correction; `step` is the 1-based update count.
void adam_step(std::span<double> param, std::span<const double> grad, AdamMoments& state,
               double lr, std::size_t step, const AdamConfig& config);

// Adam over a fixed, named parameter list. Parameters without a gradient are
// treated as having a zero gradient.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<std::pair<std::string, Tensor>> params, AdamConfig config);

  void step(double lr);
  void zero_grad();

  std::size_t steps() const { return steps_; }
  void set_steps(std::size_t s) { steps_ = s; }
  const std::vector<std::pair<std::string, Tensor>>& params() const { return params_; }
  std::vector<AdamMoments>& moments() { return moments_; }
  const std::vector<AdamMoments>& moments() const { return moments_; }

 private:
  std::vector<std::pair<std::string, Tensor>> params_;
  std::vector<AdamMoments> moments_;
  AdamConfig config_;
  std::size_t steps_ = 0;
};

// lr * decay^floor(epoch / every).
double lr_schedule(const TrainConfig& train, std::size_t epoch);

// Coarse/detail balance for stage 1: start, 0.1*end, 0.5*end, end at 0, 1/8,
// 1/4 and 1/2 of the stage's epochs, never decreasing.
double detail_weight(const TrainConfig& train, std::size_t epoch, std::size_t total_epochs);

}  // namespace fewpoint

#endif  // FEWPOINT_OPTIM_HPP_

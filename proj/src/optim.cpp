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

#include "fewpoint/optim.hpp"

#include <algorithm>
#include <cmath>

#include "fewpoint/errors.hpp"

namespace fewpoint {

namespace {

inline double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

AdamConfig adam_config(const TrainConfig& train) {
  return {train.adam_beta1, train.adam_beta2, train.adam_eps, train.f32_storage};
}

void adam_step(std::span<double> param, std::span<const double> grad, AdamMoments& state,
               double lr, std::size_t step, const AdamConfig& config) {
  if (!grad.empty() && grad.size() != param.size()) {
    throw ContractError("adam_step: gradient has " + std::to_string(grad.size()) +
                        " entries for a parameter of " + std::to_string(param.size()));
  }
  if (step == 0) throw ContractError("adam_step: step counts from 1");
  if (state.m.empty()) state.m.assign(param.size(), 0.0);
  if (state.v.empty()) state.v.assign(param.size(), 0.0);
  if (state.m.size() != param.size() || state.v.size() != param.size()) {
    throw ContractError("adam_step: moment shapes do not match the parameter");
  }
  const double b1 = config.beta1, b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad.empty() ? 0.0 : grad[i];
    double m = b1 * state.m[i] + (1.0 - b1) * g;
    double v = b2 * state.v[i] + (1.0 - b2) * g * g;
    if (config.f32_storage) {
      m = to_f32(m);
      v = to_f32(v);
    }
    state.m[i] = m;
    state.v[i] = v;
    double p = param[i] - lr * (m / c1) / (std::sqrt(v / c2) + config.eps);
    param[i] = config.f32_storage ? to_f32(p) : p;
  }
}

Adam::Adam(std::vector<std::pair<std::string, Tensor>> params, AdamConfig config)
    : params_(std::move(params)), moments_(params_.size()), config_(config) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    moments_[i].m.assign(params_[i].second.numel(), 0.0);
    moments_[i].v.assign(params_[i].second.numel(), 0.0);
  }
}

void Adam::step(double lr) {
  ++steps_;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i].second;
    adam_step(p.mutable_data(), p.grad(), moments_[i], lr, steps_, config_);
  }
}

void Adam::zero_grad() {
  for (auto& [name, p] : params_) p.zero_grad();
}

double lr_schedule(const TrainConfig& train, std::size_t epoch) {
  const std::size_t k = epoch / train.lr_decay_every;
  return train.lr * std::pow(train.lr_decay, static_cast<double>(k));
}

double detail_weight(const TrainConfig& train, std::size_t epoch, std::size_t total_epochs) {
  const double end = train.detail_weight_end;
  if (total_epochs == 0) return end;
  // Compare epoch / total against 1/8, 1/4, 1/2 in integers.
  const std::size_t e8 = epoch * 8;
  double w = end;
  if (e8 < total_epochs) w = train.detail_weight_start;
  else if (e8 < 2 * total_epochs) w = 0.1 * end;
  else if (e8 < 4 * total_epochs) w = 0.5 * end;
  return std::max(w, train.detail_weight_start);
}

}  // namespace fewpoint

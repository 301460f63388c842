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

#include "fewpoint/nn.hpp"

#include <cmath>
#include <cstring>

#include "fewpoint/errors.hpp"
#include "fewpoint/ops.hpp"

namespace fewpoint {

Tensor& ParamStore::add(const std::string& name, Tensor t) {
  if (index_.count(name)) throw ContractError("duplicate parameter '" + name + "'");
  t.set_requires_grad(true);
  index_[name] = entries_.size();
  entries_.emplace_back(name, std::move(t));
  return entries_.back().second;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
  return entries_[it->second].second;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
  return entries_[it->second].second;
}

std::vector<Tensor> ParamStore::with_prefix(const std::string& prefix) const {
  std::vector<Tensor> out;
  for (const auto& [name, t] : entries_)
    if (name.compare(0, prefix.size(), prefix) == 0) out.push_back(t);
  return out;
}

std::vector<std::string> ParamStore::names_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& e : entries_)
    if (e.first.compare(0, prefix.size(), prefix) == 0) out.push_back(e.first);
  return out;
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) e.second.zero_grad();
}

std::uint64_t ParamStore::hash(const std::string& prefix) const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [name, t] : entries_) {
    if (name.compare(0, prefix.size(), prefix) != 0) continue;
    mix(name.data(), name.size());
    for (std::size_t d : t.shape()) mix(&d, sizeof d);
    mix(t.data().data(), t.numel() * sizeof(double));
  }
  return h;
}

ScopedFreeze::ScopedFreeze(std::vector<Tensor> params) : params_(std::move(params)) {
  previous_.reserve(params_.size());
  for (Tensor& p : params_) {
    previous_.push_back(p.requires_grad());
    p.set_requires_grad(false);
  }
}

ScopedFreeze::~ScopedFreeze() {
  for (std::size_t i = 0; i < params_.size(); ++i) params_[i].set_requires_grad(previous_[i]);
}

Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
  std::vector<double> data(shape_numel(shape));
  for (double& v : data) v = rng.uniform(-bound, bound);
  return Tensor::from_data(std::move(shape), std::move(data));
}

Linear::Linear(ParamStore& store, const std::string& name, std::size_t in,
               std::size_t out, Rng& rng)
    : in_(in), out_(out) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight_ = store.add(name + ".weight", uniform_tensor({in, out}, bound, rng));
  bias_ = store.add(name + ".bias", Tensor::zeros({out}));
}

Tensor Linear::forward(const Tensor& x) const {
  return add_bias(matmul(x, weight_), bias_);
}

Mlp::Mlp(ParamStore& store, const std::string& name, std::size_t in,
         const std::vector<std::size_t>& widths, Rng& rng, double slope,
         bool activate_last)
    : slope_(slope), activate_last_(activate_last) {
  std::size_t prev = in;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    layers_.emplace_back(store, name + "." + std::to_string(i), prev, widths[i], rng);
    prev = widths[i];
  }
}

std::vector<Tensor> Mlp::forward_all(const Tensor& x) const {
  std::vector<Tensor> acts;
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].forward(h);
    if (activate_last_ || i + 1 < layers_.size()) h = leaky_relu(h, slope_);
    acts.push_back(h);
  }
  return acts;
}

Tensor Mlp::forward(const Tensor& x) const {
  if (layers_.empty()) return x;
  return forward_all(x).back();
}

std::size_t Mlp::out_features() const {
  return layers_.empty() ? 0 : layers_.back().out_features();
}

}  // namespace fewpoint

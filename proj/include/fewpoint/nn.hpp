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

#ifndef FEWPOINT_NN_HPP_
#define FEWPOINT_NN_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fewpoint/random.hpp"
#include "fewpoint/tensor.hpp"

namespace fewpoint {

// Named, ordered collection of trainable tensors. Registration order is the
// serialization order.
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor t);
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t size() const { return entries_.size(); }
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }

  // Every parameter whose name starts with `prefix`.
  std::vector<Tensor> with_prefix(const std::string& prefix) const;
  std::vector<std::string> names_with_prefix(const std::string& prefix) const;

  void zero_grad();
  // 64-bit FNV-1a over shapes and raw values of the selected parameters.
  std::uint64_t hash(const std::string& prefix = "") const;

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::map<std::string, std::size_t> index_;
};

// Disables gradients for a set of parameters for the guard's lifetime.
class ScopedFreeze {
 public:
  explicit ScopedFreeze(std::vector<Tensor> params);
  ~ScopedFreeze();
  ScopedFreeze(const ScopedFreeze&) = delete;
  ScopedFreeze& operator=(const ScopedFreeze&) = delete;

 private:
  std::vector<Tensor> params_;
  std::vector<bool> previous_;
};

// Fully-connected layer y = x W + b with W stored [in, out]. Weights are
// uniform in +-1/sqrt(in), biases start at zero.
class Linear {
 public:
  Linear() = default;
  Linear(ParamStore& store, const std::string& name, std::size_t in,
         std::size_t out, Rng& rng);

  Tensor forward(const Tensor& x) const;

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }
  const Tensor& weight() const { return weight_; }
  const Tensor& bias() const { return bias_; }
  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }

 private:
  std::size_t in_ = 0, out_ = 0;
  Tensor weight_, bias_;
};

// A stack of Linear layers with LeakyReLU after every layer, or after every
// layer but the last when `activate_last` is false.
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParamStore& store, const std::string& name, std::size_t in,
      const std::vector<std::size_t>& widths, Rng& rng, double slope,
      bool activate_last);

  Tensor forward(const Tensor& x) const;
  // Activation of every layer, in order.
  std::vector<Tensor> forward_all(const Tensor& x) const;

  std::size_t out_features() const;
  const std::vector<Linear>& layers() const { return layers_; }
  std::vector<Linear>& layers() { return layers_; }

 private:
  std::vector<Linear> layers_;
  double slope_ = 0.2;
  bool activate_last_ = true;
};

Tensor uniform_tensor(Shape shape, double bound, Rng& rng);

}  // namespace fewpoint

#endif  // FEWPOINT_NN_HPP_

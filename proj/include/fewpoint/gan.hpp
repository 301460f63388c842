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

#ifndef FEWPOINT_GAN_HPP_
#define FEWPOINT_GAN_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include "fewpoint/config.hpp"
#include "fewpoint/nn.hpp"
#include "fewpoint/tensor.hpp"

namespace fewpoint {

// Residual pyramid generator on feature vectors:
// x + W2 LeakyReLU(W1 x), widths d -> 2d -> d.
class Generator {
 public:
  Generator() = default;
  Generator(ParamStore& store, std::size_t dim, double slope, Rng& rng);

  Tensor generate(const Tensor& x) const;
  // The correction term alone (generate(x) == x + delta(x)).
  Tensor delta(const Tensor& x) const;

  Linear& expand() { return expand_; }
  Linear& project() { return project_; }

 private:
  std::size_t dim_ = 0;
  Linear expand_, project_;
  double slope_ = 0.2;
};

// External attention against two learnable memories M_k, M_v of S rows:
// A = softmax over tokens of (tokens M_k^T), then each row L1-normalised over
// the memory axis; out = tokens + A M_v.
class ExternalAttention {
 public:
  ExternalAttention() = default;
  ExternalAttention(ParamStore& store, const std::string& name, std::size_t token_dim,
                    std::size_t memory_units, Rng& rng);

  Tensor forward(const Tensor& tokens, Tensor* attention = nullptr) const;

  Tensor& memory_keys() { return keys_; }
  Tensor& memory_values() { return values_; }

 private:
  Tensor keys_, values_;
};

// WGAN critic: reshape the MGFV into tokens, external attention, flatten,
// fully-connected stack to one unbounded score.
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(ParamStore& store, const GanConfig& config, std::size_t dim, Rng& rng);

  // f: any tensor with `dim` entries -> scalar tensor.
  Tensor discriminate(const Tensor& f) const;

  const ExternalAttention& attention() const { return attention_; }
  Mlp& head() { return head_; }

 private:
  std::size_t dim_ = 0, tokens_ = 1;
  ExternalAttention attention_;
  Mlp head_;
};

using Critic = std::function<Tensor(const Tensor&)>;

struct CriticLossTerms {
  Tensor loss;            // critic loss + lambda * penalty
  double critic_gap = 0;  // E[D(real)] - E[D(fake)]
  double penalty = 0;     // E[(||grad D(x_hat)|| - 1)^2]
};

// E[D(fake)] - E[D(real)] + lambda E[(||grad_x_hat D(x_hat)||_2 - 1)^2] with
// x_hat = u real + (1 - u) fake, one u ~ U[0,1] per sample drawn from seed.
// Inputs are treated as constants.
CriticLossTerms discriminator_loss(const Critic& critic, const std::vector<Tensor>& real,
                                   const std::vector<Tensor>& fake, double lambda,
                                   std::uint64_t seed);

inline constexpr double kBceClamp = 1e-7;

// -(t log z + (1 - t) log(1 - z)), z clamped to [1e-7, 1 - 1e-7]; the
// literal variant drops the leading minus sign.
Tensor bce(const Tensor& z, double target, bool literal = false);
double bce(double z, double target, bool literal = false);

struct GeneratorLossTerms {
  Tensor loss;  // alpha * adversarial + beta * l1
  Tensor adversarial;
  Tensor l1;
};

// Adversarial part: bce(sigmoid(D(x)), 1) + bce(sigmoid(D(G(x))), 1); L1
// part: ||y - G(x)||_1. Both are averaged over the batch. The critic's
// parameters must be frozen by the caller (see ScopedFreeze).
GeneratorLossTerms generator_loss(const Generator& generator, const Critic& critic,
                                  const std::vector<Tensor>& x, const std::vector<Tensor>& y,
                                  const GanConfig& config);

}  // namespace fewpoint

#endif  // FEWPOINT_GAN_HPP_

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

#include "fewpoint/gan.hpp"

#include <algorithm>
#include <cmath>

#include "fewpoint/errors.hpp"
#include "fewpoint/ops.hpp"
#include "fewpoint/random.hpp"

namespace fewpoint {

Generator::Generator(ParamStore& store, std::size_t dim, double slope, Rng& rng)
    : dim_(dim),
      expand_(store, "generator.expand", dim, 2 * dim, rng),
      project_(store, "generator.project", 2 * dim, dim, rng),
      slope_(slope) {}

Tensor Generator::delta(const Tensor& x) const {
  if (x.numel() != dim_) {
    throw DimensionError("generator: expected width " + std::to_string(dim_) + ", got " +
                         shape_str(x.shape()));
  }
  const Tensor row = reshape(x, {1, dim_});
  return reshape(project_.forward(leaky_relu(expand_.forward(row), slope_)), x.shape());
}

Tensor Generator::generate(const Tensor& x) const { return add(x, delta(x)); }

ExternalAttention::ExternalAttention(ParamStore& store, const std::string& name,
                                     std::size_t token_dim, std::size_t memory_units,
                                     Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(token_dim));
  keys_ = store.add(name + ".memory_keys", uniform_tensor({memory_units, token_dim}, bound, rng));
  values_ = store.add(name + ".memory_values",
                      uniform_tensor({memory_units, token_dim}, bound, rng));
}

Tensor ExternalAttention::forward(const Tensor& tokens, Tensor* attention) const {
  if (tokens.rank() != 2 || tokens.dim(1) != keys_.dim(1)) {
    throw DimensionError("external attention: expected [t," + std::to_string(keys_.dim(1)) +
                         "] tokens, got " + shape_str(tokens.shape()));
  }
  const Tensor logits = matmul(tokens, keys_, false, true);  // [t, S]
  const Tensor a = normalize_l1(softmax(logits, 0), 1);
  if (attention) *attention = a;
  return add(tokens, matmul(a, values_));
}

Discriminator::Discriminator(ParamStore& store, const GanConfig& config, std::size_t dim,
                             Rng& rng)
    : dim_(dim), tokens_(config.token_count) {
  if (tokens_ == 0 || dim % tokens_ != 0) {
    throw ContractError("discriminator: token_count must divide the feature width");
  }
  attention_ = ExternalAttention(store, "discriminator.ea", dim / tokens_,
                                 config.memory_units, rng);
  std::vector<std::size_t> widths = config.disc_hidden;
  widths.push_back(1);
  head_ = Mlp(store, "discriminator.head", dim, widths, rng, config.leaky_slope, false);
}

Tensor Discriminator::discriminate(const Tensor& f) const {
  if (f.numel() != dim_) {
    throw DimensionError("discriminator: expected width " + std::to_string(dim_) + ", got " +
                         shape_str(f.shape()));
  }
  const Tensor tokens = reshape(f, {tokens_, dim_ / tokens_});
  const Tensor mixed = attention_.forward(tokens);
  return reshape(head_.forward(reshape(mixed, {1, dim_})), {});
}

CriticLossTerms discriminator_loss(const Critic& critic, const std::vector<Tensor>& real,
                                   const std::vector<Tensor>& fake, double lambda,
                                   std::uint64_t seed) {
  if (real.size() != fake.size()) {
    throw ContractError("discriminator_loss: batch sizes " + std::to_string(real.size()) +
                        " and " + std::to_string(fake.size()) + " differ");
  }
  if (real.empty()) throw ContractError("discriminator_loss: empty batch");
  Rng rng(seed);
  const double inv = 1.0 / static_cast<double>(real.size());
  Tensor total;
  double gap = 0.0, pen_sum = 0.0;
  for (std::size_t i = 0; i < real.size(); ++i) {
    const Tensor xr = real[i].detach();
    const Tensor xf = fake[i].detach();
    if (xr.shape() != xf.shape()) {
      throw DimensionError("discriminator_loss: sample shapes differ");
    }
    const double u = rng.uniform();
    std::vector<double> mix(xr.numel());
    for (std::size_t k = 0; k < mix.size(); ++k) {
      mix[k] = u * xr.data()[k] + (1.0 - u) * xf.data()[k];
    }
    const Tensor x_hat = Tensor::from_data(xr.shape(), std::move(mix), true);
    const Tensor d_real = critic(xr);
    const Tensor d_fake = critic(xf);
    const Tensor d_hat = critic(x_hat);
    Tensor g = grad(d_hat, {x_hat}, true)[0];
    if (!g.defined()) g = Tensor::zeros(x_hat.shape());  // critic ignores its input
    const Tensor penalty = square(add_scalar(l2_norm(g), -1.0));
    const Tensor term = add(sub(d_fake, d_real), scale(penalty, lambda));
    total = total.defined() ? add(total, term) : term;
    gap += d_real.item() - d_fake.item();
    pen_sum += penalty.item();
  }
  return {scale(total, inv), gap * inv, pen_sum * inv};
}

Tensor bce(const Tensor& z, double target, bool literal) {
  const Tensor zc = clamp(z, kBceClamp, 1.0 - kBceClamp);
  Tensor value;
  if (target == 1.0) {
    value = log(zc);
  } else if (target == 0.0) {
    value = log(add_scalar(neg(zc), 1.0));
  } else {
    value = add(scale(log(zc), target), scale(log(add_scalar(neg(zc), 1.0)), 1.0 - target));
  }
  return literal ? value : neg(value);
}

double bce(double z, double target, bool literal) {
  const double zc = std::clamp(z, kBceClamp, 1.0 - kBceClamp);
  const double v = target * std::log(zc) + (1.0 - target) * std::log(1.0 - zc);
  return literal ? v : -v;
}

GeneratorLossTerms generator_loss(const Generator& generator, const Critic& critic,
                                  const std::vector<Tensor>& x, const std::vector<Tensor>& y,
                                  const GanConfig& config) {
  if (x.size() != y.size()) {
    throw ContractError("generator_loss: batch sizes " + std::to_string(x.size()) + " and " +
                        std::to_string(y.size()) + " differ");
  }
  if (x.empty()) throw ContractError("generator_loss: empty batch");
  const double inv = 1.0 / static_cast<double>(x.size());
  Tensor adv, l1;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Tensor gx = generator.generate(x[i]);
    // The first term has no path to G; it is kept as written in the loss.
    const Tensor a = add(bce(sigmoid(critic(x[i])), 1.0, config.literal_bce),
                         bce(sigmoid(critic(gx)), 1.0, config.literal_bce));
    const Tensor d = l1_norm(sub(y[i], gx));
    adv = adv.defined() ? add(adv, a) : a;
    l1 = l1.defined() ? add(l1, d) : d;
  }
  adv = scale(adv, inv);
  l1 = scale(l1, inv);
  return {add(scale(adv, config.alpha), scale(l1, config.beta)), adv, l1};
}

}  // namespace fewpoint

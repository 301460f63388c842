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

#include "fewpoint/model.hpp"

#include "fewpoint/errors.hpp"
#include "fewpoint/random.hpp"

namespace fewpoint {

Model::Model(const Config& config) : config_(config) {
  config_.validate();
  // One stream per network so that toggling a branch does not reshuffle the
  // initial weights of the others.
  Rng enc_rng(derive_seed(config_.train.seed, "init:encoder"));
  Rng dec_rng(derive_seed(config_.train.seed, "init:decoder"));
  encoder_ = Encoder(store_, config_.encoder, enc_rng);
  decoder_ = Decoder(store_, config_.decoder, config_.encoder.mgfv_dim, dec_rng);
  if (config_.gan.use_wgan) {
    Rng gen_rng(derive_seed(config_.train.seed, "init:generator"));
    Rng disc_rng(derive_seed(config_.train.seed, "init:discriminator"));
    generator_ = Generator(store_, config_.encoder.mgfv_dim, config_.gan.leaky_slope, gen_rng);
    discriminator_ = Discriminator(store_, config_.gan, config_.encoder.mgfv_dim, disc_rng);
  }
  if (config_.train.f32_storage) round_to_f32();
}

void Model::set_train_config(const TrainConfig& train) {
  Config next = config_;
  next.train = train;
  next.validate();
  config_ = next;
}

const Generator& Model::generator() const {
  if (!has_gan()) throw ContractError("model: this variant has no WGAN module");
  return generator_;
}

Generator& Model::generator() {
  if (!has_gan()) throw ContractError("model: this variant has no WGAN module");
  return generator_;
}

const Discriminator& Model::discriminator() const {
  if (!has_gan()) throw ContractError("model: this variant has no WGAN module");
  return discriminator_;
}

Tensor Model::critic(const Tensor& feature) const { return discriminator().discriminate(feature); }

Critic Model::critic_fn() const {
  return [this](const Tensor& f) { return critic(f); };
}

Tensor Model::decoder_input(const Tensor& points, bool through_generator) const {
  const Tensor x = encode(points);
  if (!through_generator) return x;
  return generator().generate(x);
}

DecodedClouds Model::forward(const Tensor& points, bool through_generator) const {
  return decoder_.decode(decoder_input(points, through_generator));
}

DecodedClouds Model::complete(const PointCloud& partial) const {
  if (partial.empty()) throw DegenerateInputError("complete: empty input cloud");
  NoGradGuard ng;
  return forward(partial.to_tensor(), uses_generator());
}

void Model::round_to_f32() {
  for (auto& [name, t] : store_.entries()) {
    Tensor p = t;
    for (double& v : p.mutable_data()) v = static_cast<double>(static_cast<float>(v));
  }
}

}  // namespace fewpoint

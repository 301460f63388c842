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

#ifndef FEWPOINT_MODEL_HPP_
#define FEWPOINT_MODEL_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fewpoint/config.hpp"
#include "fewpoint/decoder.hpp"
#include "fewpoint/encoder.hpp"
#include "fewpoint/gan.hpp"
#include "fewpoint/nn.hpp"
#include "fewpoint/pointcloud.hpp"

namespace fewpoint {

// Parameter-name prefixes of the four networks.
inline constexpr const char* kEncoderPrefix = "encoder.";
inline constexpr const char* kDecoderPrefix = "decoder.";
inline constexpr const char* kGeneratorPrefix = "generator.";
inline constexpr const char* kDiscriminatorPrefix = "discriminator.";

// Encoder, decoder and, when use_wgan is set, the feature-space generator and
// critic, all registered in one ParamStore.
class Model {
 public:
  explicit Model(const Config& config);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const Config& config() const { return config_; }
  // Training hyperparameters may change between stages; the architecture
  // may not.
  void set_train_config(const TrainConfig& train);
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  const Encoder& encoder() const { return encoder_; }
  const Decoder& decoder() const { return decoder_; }
  Decoder& decoder() { return decoder_; }
  bool has_gan() const { return config_.gan.use_wgan; }
  const Generator& generator() const;
  Generator& generator();
  const Discriminator& discriminator() const;

  // Highest fully completed training stage (0 for a fresh model).
  int completed_stage() const { return completed_stage_; }
  void set_completed_stage(int stage) { completed_stage_ = stage; }

  Tensor encode(const Tensor& points) const { return encoder_.encode(points); }
  Tensor critic(const Tensor& feature) const;
  Critic critic_fn() const;

  // Decoder input for a partial cloud: G(encode(P)) when the WGAN path is
  // enabled and wired in, encode(P) otherwise.
  Tensor decoder_input(const Tensor& points, bool through_generator) const;
  // True once the generator has been trained (stage 2 done) in a WGAN model.
  bool uses_generator() const { return has_gan() && completed_stage_ >= 2; }

  DecodedClouds forward(const Tensor& points, bool through_generator) const;
  // Inference on a [n,3] cloud without recording a graph.
  DecodedClouds complete(const PointCloud& partial) const;

  std::vector<Tensor> group(const std::string& prefix) const { return store_.with_prefix(prefix); }
  std::uint64_t hash(const std::string& prefix = "") const { return store_.hash(prefix); }

  // Rounds every parameter to binary32 (used when train.f32_storage is set).
  void round_to_f32();

 private:
  Config config_;
  ParamStore store_;
  Encoder encoder_;
  Decoder decoder_;
  Generator generator_;
  Discriminator discriminator_;
  int completed_stage_ = 0;
};

}  // namespace fewpoint

#endif  // FEWPOINT_MODEL_HPP_

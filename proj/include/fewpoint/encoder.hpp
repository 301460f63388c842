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

#ifndef FEWPOINT_ENCODER_HPP_
#define FEWPOINT_ENCODER_HPP_

#include <vector>

#include "fewpoint/config.hpp"
#include "fewpoint/nn.hpp"
#include "fewpoint/tensor.hpp"

namespace fewpoint {

// Single-head scaled dot-product self-attention over per-point features,
// followed by a point-wise feed-forward layer; both with residual adds.
class SelfAttentionBlock {
 public:
  SelfAttentionBlock() = default;
  SelfAttentionBlock(ParamStore& store, const std::string& name, std::size_t width,
                     std::size_t key_dim, double slope, Rng& rng);

  // h: [n, width] -> [n, width]. If `weights` is given it receives the
  // [n, n] attention matrix.
  Tensor forward(const Tensor& h, Tensor* weights = nullptr) const;

 private:
  Linear query_, key_, value_, feed_;
  std::size_t key_dim_ = 0;
  double slope_ = 0.2;
};

// Ensemble encoder: a PointNet-style combined MLP branch and the same branch
// with self-attention after the first embedding layer, fused by one
// fully-connected layer and LeakyReLU into the global feature vector (MGFV).
//
// Clouds enter as [n,3] tensors; multi-level features and the MGFV are
// returned as rows ([1, width]).
class Encoder {
 public:
  Encoder() = default;
  Encoder(ParamStore& store, const EncoderConfig& config, Rng& rng);

  // Max-pooled features of the last `pooled_levels` layers, concatenated.
  Tensor pn_cmlp(const Tensor& points) const;
  Tensor t_cmlp(const Tensor& points, std::vector<Tensor>* attention = nullptr) const;
  Tensor fuse(const Tensor& pn, const Tensor& t) const;
  // Fuse for the attention-free ablation: the PN branch alone.
  Tensor fuse(const Tensor& pn) const;

  Tensor encode(const Tensor& points) const;

  const EncoderConfig& config() const { return config_; }
  const Linear& fusion() const { return fusion_; }
  Linear& fusion() { return fusion_; }

 private:
  Tensor pool_levels(const std::vector<Tensor>& acts) const;

  EncoderConfig config_;
  Mlp pn_mlp_;
  Linear t_embed_;
  std::vector<SelfAttentionBlock> t_blocks_;
  Mlp t_mlp_;
  Linear fusion_;
};

}  // namespace fewpoint

#endif  // FEWPOINT_ENCODER_HPP_

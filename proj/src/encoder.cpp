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

#include "fewpoint/encoder.hpp"

#include <cmath>

#include "fewpoint/errors.hpp"
#include "fewpoint/ops.hpp"

namespace fewpoint {

SelfAttentionBlock::SelfAttentionBlock(ParamStore& store, const std::string& name,
                                       std::size_t width, std::size_t key_dim,
                                       double slope, Rng& rng)
    : query_(store, name + ".query", width, key_dim, rng),
      key_(store, name + ".key", width, key_dim, rng),
      value_(store, name + ".value", width, width, rng),
      feed_(store, name + ".feed", width, width, rng),
      key_dim_(key_dim),
      slope_(slope) {}

Tensor SelfAttentionBlock::forward(const Tensor& h, Tensor* weights) const {
  const Tensor q = query_.forward(h);
  const Tensor k = key_.forward(h);
  const Tensor v = value_.forward(h);
  const double inv = 1.0 / std::sqrt(static_cast<double>(key_dim_));
  const Tensor a = softmax(scale(matmul(q, k, false, true), inv), 1);
  if (weights) *weights = a;
  const Tensor attended = add(h, matmul(a, v));
  return add(attended, leaky_relu(feed_.forward(attended), slope_));
}

Encoder::Encoder(ParamStore& store, const EncoderConfig& config, Rng& rng)
    : config_(config) {
  const auto& dims = config_.per_point_dims;
  pn_mlp_ = Mlp(store, "encoder.pn", 3, dims, rng, config_.leaky_slope, true);
  if (config_.use_transformer_branch) {
    t_embed_ = Linear(store, "encoder.t.embed", 3, dims[0], rng);
    for (std::size_t b = 0; b < config_.attention_blocks; ++b) {
      t_blocks_.emplace_back(store, "encoder.t.attn" + std::to_string(b), dims[0],
                             config_.attention_dim, config_.leaky_slope, rng);
    }
    std::vector<std::size_t> rest(dims.begin() + 1, dims.end());
    t_mlp_ = Mlp(store, "encoder.t", dims[0], rest, rng, config_.leaky_slope, true);
  }
  const std::size_t fused_in =
      config_.pooled_width() * (config_.use_transformer_branch ? 2 : 1);
  fusion_ = Linear(store, "encoder.fuse", fused_in, config_.mgfv_dim, rng);
}

Tensor Encoder::pool_levels(const std::vector<Tensor>& acts) const {
  const std::size_t n = acts.size();
  std::vector<Tensor> pooled;
  for (std::size_t i = n - config_.pooled_levels; i < n; ++i) {
    pooled.push_back(max_pool_points(acts[i]));
  }
  const Tensor flat = concat(pooled, 0);
  return reshape(flat, {1, flat.numel()});
}

Tensor Encoder::pn_cmlp(const Tensor& points) const {
  if (points.rank() != 2 || points.dim(1) != 3) {
    throw DimensionError("encoder: expected [n,3] points, got " + shape_str(points.shape()));
  }
  return pool_levels(pn_mlp_.forward_all(points));
}

Tensor Encoder::t_cmlp(const Tensor& points, std::vector<Tensor>* attention) const {
  if (!config_.use_transformer_branch) {
    throw ContractError("encoder: the transformer branch is disabled in this configuration");
  }
  if (points.rank() != 2 || points.dim(1) != 3) {
    throw DimensionError("encoder: expected [n,3] points, got " + shape_str(points.shape()));
  }
  std::vector<Tensor> acts;
  Tensor h = leaky_relu(t_embed_.forward(points), config_.leaky_slope);
  for (const auto& block : t_blocks_) {
    Tensor w;
    h = block.forward(h, attention ? &w : nullptr);
    if (attention) attention->push_back(w);
  }
  acts.push_back(h);
  for (Tensor& a : t_mlp_.forward_all(h)) acts.push_back(std::move(a));
  return pool_levels(acts);
}

Tensor Encoder::fuse(const Tensor& pn, const Tensor& t) const {
  if (!config_.use_transformer_branch) {
    throw ContractError("encoder: two-branch fuse on a single-branch encoder");
  }
  const std::size_t w = config_.pooled_width();
  if (pn.numel() != w || t.numel() != w) {
    throw DimensionError("fuse: expected two width-" + std::to_string(w) + " inputs, got " +
                         shape_str(pn.shape()) + " and " + shape_str(t.shape()));
  }
  const Tensor joined = concat({reshape(pn, {1, w}), reshape(t, {1, w})}, 1);
  return leaky_relu(fusion_.forward(joined), config_.leaky_slope);
}

Tensor Encoder::fuse(const Tensor& pn) const {
  if (config_.use_transformer_branch) {
    throw ContractError("encoder: single-branch fuse on a two-branch encoder");
  }
  const std::size_t w = config_.pooled_width();
  if (pn.numel() != w) {
    throw DimensionError("fuse: expected a width-" + std::to_string(w) + " input, got " +
                         shape_str(pn.shape()));
  }
  return leaky_relu(fusion_.forward(reshape(pn, {1, w})), config_.leaky_slope);
}

Tensor Encoder::encode(const Tensor& points) const {
  if (points.rank() != 2 || points.dim(0) == 0) {
    throw DegenerateInputError("encode: empty cloud");
  }
  const Tensor pn = pn_cmlp(points);
  if (!config_.use_transformer_branch) return fuse(pn);
  return fuse(pn, t_cmlp(points));
}

}  // namespace fewpoint

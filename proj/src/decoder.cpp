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

#include "fewpoint/decoder.hpp"

#include <cmath>

#include "fewpoint/errors.hpp"
#include "fewpoint/metrics.hpp"
#include "fewpoint/ops.hpp"
#include "fewpoint/pointcloud.hpp"

namespace fewpoint {

Decoder::Decoder(ParamStore& store, const DecoderConfig& config, std::size_t mgfv_dim,
                 Rng& rng)
    : config_(config), mgfv_dim_(mgfv_dim) {
  if (config_.fold_hidden.empty()) {
    throw ContractError("decoder: fold_hidden needs at least one layer");
  }
  std::vector<std::size_t> coarse_widths = config_.coarse_hidden;
  coarse_widths.push_back(config_.coarse_n * 3);
  coarse_mlp_ = Mlp(store, "decoder.coarse", mgfv_dim, coarse_widths, rng,
                    config_.leaky_slope, false);
  if (config_.use_pointnetpp_local) {
    std::vector<std::size_t> local_widths = config_.local_hidden;
    local_widths.push_back(config_.local_dim);
    local_mlp_ = Mlp(store, "decoder.local", 3, local_widths, rng, config_.leaky_slope, true);
  }
  const std::size_t local = config_.use_pointnetpp_local ? config_.local_dim : 0;
  const std::size_t fan_in = 2 + 3 + local + mgfv_dim;
  const std::size_t h0 = config_.fold_hidden[0];
  fold_in_weight_ = store.add("decoder.fold.in.weight",
                              uniform_tensor({fan_in, h0},
                                             1.0 / std::sqrt(static_cast<double>(fan_in)), rng));
  fold_in_bias_ = store.add("decoder.fold.in.bias", Tensor::zeros({h0}));
  std::size_t prev = h0;
  for (std::size_t i = 1; i < config_.fold_hidden.size(); ++i) {
    fold_layers_.emplace_back(store, "decoder.fold." + std::to_string(i), prev,
                              config_.fold_hidden[i], rng);
    prev = config_.fold_hidden[i];
  }
  fold_layers_.emplace_back(store, "decoder.fold.out", prev, 3, rng);
}

Tensor Decoder::coarse_generate(const Tensor& mgfv) const {
  if (mgfv.numel() != mgfv_dim_) {
    throw DimensionError("decoder: expected an MGFV of width " + std::to_string(mgfv_dim_) +
                         ", got " + shape_str(mgfv.shape()));
  }
  const Tensor flat = coarse_mlp_.forward(reshape(mgfv, {1, mgfv_dim_}));
  return reshape(flat, {config_.coarse_n, 3});
}

Tensor Decoder::local_features(const Tensor& coarse) const {
  if (!config_.use_pointnetpp_local) {
    throw ContractError("decoder: local features are disabled in this configuration");
  }
  const PointCloud cloud = PointCloud::from_tensor(coarse);
  const std::size_t m = config_.centroids();
  if (m == 0 || m > cloud.size()) {
    throw DegenerateInputError("decoder: " + std::to_string(cloud.size()) +
                               " coarse points cannot supply " + std::to_string(m) +
                               " centroids");
  }
  const std::vector<std::size_t> centroid_idx = farthest_point_sample(cloud, m, 0);
  const PointCloud centroids = cloud.select(centroid_idx);
  const auto groups = ball_query(centroids, cloud, config_.sa_k, config_.sa_radius);

  std::vector<std::size_t> neighbour_rows, centre_rows;
  neighbour_rows.reserve(m * config_.sa_k);
  centre_rows.reserve(m * config_.sa_k);
  for (std::size_t c = 0; c < m; ++c) {
    for (std::size_t idx : groups[c]) {
      neighbour_rows.push_back(idx);
      centre_rows.push_back(centroid_idx[c]);
    }
  }
  const Tensor offsets =
      sub(gather_rows(coarse, neighbour_rows), gather_rows(coarse, centre_rows));
  const Tensor centroid_features = group_max(local_mlp_.forward(offsets), config_.sa_k);

  // Nearest-centroid propagation back to every coarse point.
  const auto owner = knn(cloud, centroids, 1);
  std::vector<std::size_t> rows(cloud.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = owner[i][0];
  return gather_rows(centroid_features, rows);
}

Tensor Decoder::grid() const {
  const std::size_t g = config_.grid_side;
  std::vector<double> uv;
  uv.reserve(g * g * 2);
  auto node = [&](std::size_t i) {
    if (g == 1) return 0.0;
    return -config_.grid_extent +
           2.0 * config_.grid_extent * static_cast<double>(i) / static_cast<double>(g - 1);
  };
  for (std::size_t a = 0; a < g; ++a)
    for (std::size_t b = 0; b < g; ++b) {
      uv.push_back(node(a));
      uv.push_back(node(b));
    }
  return Tensor::from_data({g * g, 2}, std::move(uv));
}

Tensor Decoder::fold(const Tensor& coarse, const Tensor& local, const Tensor& mgfv) const {
  const std::size_t n = config_.coarse_n;
  const std::size_t g2 = config_.grid_side * config_.grid_side;
  if (coarse.rank() != 2 || coarse.dim(0) != n || coarse.dim(1) != 3) {
    throw DimensionError("fold: expected coarse [" + std::to_string(n) + ",3], got " +
                         shape_str(coarse.shape()));
  }
  if (mgfv.numel() != mgfv_dim_) {
    throw DimensionError("fold: MGFV width mismatch, got " + shape_str(mgfv.shape()));
  }
  std::vector<Tensor> per_point{coarse};
  if (config_.use_pointnetpp_local) {
    if (!local.defined() || local.rank() != 2 || local.dim(0) != n ||
        local.dim(1) != config_.local_dim) {
      throw DimensionError("fold: local features must be [" + std::to_string(n) + "," +
                           std::to_string(config_.local_dim) + "]");
    }
    per_point.push_back(local);
  }
  per_point.push_back(broadcast_to(reshape(mgfv, {1, mgfv_dim_}), {n, mgfv_dim_}));
  const Tensor features = concat(per_point, 1);

  // [u, v | per-point features] x W splits into a grid term shared by all
  // coarse points and a per-point term shared by all grid nodes.
  const std::size_t fan_in = fold_in_weight_.dim(0);
  const Tensor w_grid = slice(fold_in_weight_, 0, 0, 2);
  const Tensor w_point = slice(fold_in_weight_, 0, 2, fan_in);
  const Tensor grid_term = tile_rows(matmul(grid(), w_grid), n);
  const Tensor point_term = repeat_rows(matmul(features, w_point), g2);
  Tensor h = leaky_relu(add_bias(add(grid_term, point_term), fold_in_bias_),
                        config_.leaky_slope);
  for (std::size_t i = 0; i + 1 < fold_layers_.size(); ++i) {
    h = leaky_relu(fold_layers_[i].forward(h), config_.leaky_slope);
  }
  const Tensor offsets = fold_layers_.back().forward(h);
  return add(repeat_rows(coarse, g2), offsets);
}

DecodedClouds Decoder::decode(const Tensor& mgfv) const {
  DecodedClouds out;
  out.coarse = coarse_generate(mgfv);
  Tensor local;
  if (config_.use_pointnetpp_local) local = local_features(out.coarse);
  out.detail = fold(out.coarse, local, mgfv);
  return out;
}

}  // namespace fewpoint

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

#ifndef FEWPOINT_TESTS_FIXTURES_HPP_
#define FEWPOINT_TESTS_FIXTURES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "fewpoint/config.hpp"
#include "fewpoint/nn.hpp"
#include "fewpoint/pointcloud.hpp"
#include "fewpoint/random.hpp"

namespace fewpoint::testing {

// Widths small enough for finite differences over every parameter.
inline Config mini_config() {
  Config c;
  c.encoder.per_point_dims = {4, 5, 6, 7, 8};
  c.encoder.attention_dim = 3;
  c.encoder.mgfv_dim = 8;
  c.decoder.coarse_n = 4;
  c.decoder.grid_side = 2;
  c.decoder.coarse_hidden = {6};
  c.decoder.fold_hidden = {5, 4};
  c.decoder.local_hidden = {3};
  c.decoder.local_dim = 3;
  c.decoder.sa_centroids = 2;
  c.decoder.sa_k = 2;
  c.decoder.sa_radius = 10.0;
  c.gan.token_count = 2;
  c.gan.memory_units = 3;
  c.gan.disc_hidden = {4};
  c.train.f32_storage = false;
  return c;
}

// Zero-initialised biases put exact zeros (a centroid's own offset, say) on
// the LeakyReLU kink, where central differences are one-sided. Finite
// difference checks randomise them first.
inline void randomize_biases(ParamStore& store, Rng& rng, double bound = 0.5) {
  for (const auto& [name, t] : store.entries()) {
    if (name.find("bias") == std::string::npos) continue;
    Tensor p = t;
    for (double& v : p.mutable_data()) v = rng.uniform(-bound, bound);
  }
}

inline PointCloud random_cloud(std::size_t n, Rng& rng, double extent = 1.0) {
  std::vector<Vec3> p(n);
  for (auto& v : p) v = {rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                         rng.uniform(-extent, extent)};
  return PointCloud(std::move(p));
}

inline std::vector<double> flat(const Tensor& t) {
  return std::vector<double>(t.data().begin(), t.data().end());
}

// Max |a - b| / max(max |b|, floor).
inline double max_rel_diff(const Tensor& a, const Tensor& b, double floor = 1e-12) {
  double diff = 0.0, scale = floor;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    diff = std::max(diff, std::abs(a.data()[i] - b.data()[i]));
    scale = std::max(scale, std::abs(b.data()[i]));
  }
  return diff / scale;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    Rng rng(reinterpret_cast<std::uintptr_t>(this) ^ std::hash<std::string>{}(tag));
    path_ = std::filesystem::temp_directory_path() /
            ("fewpoint_" + tag + "_" + std::to_string(rng.next_u64() % 1000000007));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fewpoint::testing

#endif  // FEWPOINT_TESTS_FIXTURES_HPP_

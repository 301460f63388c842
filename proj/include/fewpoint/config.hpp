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

#ifndef FEWPOINT_CONFIG_HPP_
#define FEWPOINT_CONFIG_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace fewpoint {

struct EncoderConfig {
  std::vector<std::size_t> per_point_dims{64, 128, 256, 512, 1024};
  // The last `pooled_levels` layers are max-pooled and concatenated.
  std::size_t pooled_levels = 3;
  std::size_t attention_heads = 1;
  std::size_t attention_dim = 256;
  std::size_t attention_blocks = 1;
  std::size_t mgfv_dim = 1024;
  double leaky_slope = 0.2;
  bool use_transformer_branch = true;

  std::size_t pooled_width() const;
};

struct DecoderConfig {
  std::size_t coarse_n = 64;
  std::size_t grid_side = 4;
  double grid_extent = 0.05;
  std::vector<std::size_t> coarse_hidden{1024, 1024};
  std::vector<std::size_t> fold_hidden{512, 512};
  std::size_t sa_centroids = 0;  // 0 selects coarse_n / 2
  double sa_radius = 0.25;
  std::size_t sa_k = 8;
  std::vector<std::size_t> local_hidden{64};
  std::size_t local_dim = 128;
  double leaky_slope = 0.2;
  bool use_pointnetpp_local = true;

  std::size_t detail_n() const { return coarse_n * grid_side * grid_side; }
  std::size_t centroids() const { return sa_centroids ? sa_centroids : std::max<std::size_t>(1, coarse_n / 2); }
};

struct GanConfig {
  double gp_lambda = 10.0;
  std::size_t critic_steps = 5;
  double alpha = 1.0;  // weight of the adversarial generator term
  double beta = 10.0;  // weight of the L1 feature term
  std::size_t token_count = 16;
  std::size_t memory_units = 64;
  std::vector<std::size_t> disc_hidden{256};
  double leaky_slope = 0.2;
  bool literal_bce = false;
  bool use_wgan = true;
};

enum class DistanceKind { kChamfer, kEmd };

struct TrainConfig {
  double lr = 1e-4;
  double lr_decay = 0.7;
  std::size_t lr_decay_every = 20;
  std::size_t epochs = 250;
  // Per-stage overrides; 0 falls back to `epochs`.
  std::size_t stage1_epochs = 0;
  std::size_t stage2_epochs = 0;
  std::size_t stage3_epochs = 0;
  std::size_t batch_size = 32;
  double detail_weight_start = 0.01;
  double detail_weight_end = 1.0;
  DistanceKind d1 = DistanceKind::kChamfer;
  DistanceKind d2 = DistanceKind::kChamfer;
  bool cd_squared = false;
  double emd_epsilon = 0.01;
  double stage3_l1_weight = 1e-3;
  bool stage3_train_discriminator = false;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  // Round parameters and optimizer moments to binary32 after every update so
  // that checkpoints (32-bit payloads) round-trip exactly.
  bool f32_storage = true;
  // When > 0, each training input is thinned to a random size drawn
  // uniformly from [input_subsample_min, n] before encoding. Off by default.
  std::size_t input_subsample_min = 0;
  std::uint64_t seed = 1;

  std::size_t epochs_for(int stage) const;
};

struct Config {
  EncoderConfig encoder;
  DecoderConfig decoder;
  GanConfig gan;
  TrainConfig train;

  // Canonical "key = value" lines in a fixed order.
  std::vector<std::pair<std::string, std::string>> to_entries() const;
  std::string to_text() const;

  void set(const std::string& key, const std::string& value);
  void validate() const;

  // Keys absent from the text keep their value in `base`.
  static Config from_text(const std::string& text, const std::string& source = "<config>",
                          const Config& base = Config());
  static Config from_file(const std::filesystem::path& path, const Config& base = Config());
  static std::vector<std::string> keys();
};

// Reduced-width configuration used for desk-scale runs and the acceptance
// suite.
Config desk_config();

// Variant names used in reports, derived from the three ablation flags.
std::string variant_name(const Config& c);

}  // namespace fewpoint

#endif  // FEWPOINT_CONFIG_HPP_

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

#ifndef FEWPOINT_DATASET_HPP_
#define FEWPOINT_DATASET_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fewpoint/pointcloud.hpp"

namespace fewpoint {

// The eight synthetic classes, in manifest order.
const std::vector<std::string>& shape_classes();

// Area-uniform surface samples of one parametric shape with seeded random
// proportions, normalised to the unit ball.
PointCloud generate_shape(const std::string& shape_class, std::size_t n_points,
                          std::uint64_t seed);

struct PairConfig {
  std::size_t partial_points = 128;
  double keep_fraction_min = 0.4;
};

// Crop along a seeded random view direction, then subsample to the input size.
SamplePair make_pair(const PointCloud& gt, std::uint64_t view_seed, const PairConfig& config);

struct DatasetConfig {
  std::filesystem::path root;
  std::size_t classes = 8;  // first N of shape_classes()
  std::size_t train_per_class = 25;
  std::size_t val_per_class = 1;
  std::size_t test_per_class = 5;
  std::size_t gt_points = 512;
  std::size_t partial_points = 128;
  std::size_t train_views = 8;
  std::size_t test_views = 1;
  double keep_fraction_min = 0.4;
  std::uint64_t seed = 1;
};

struct ManifestEntry {
  std::string sample_id;
  std::string class_label;
  std::string split;  // train | val | test
  std::string gt_path;                   // relative to the manifest root
  std::vector<std::string> partial_paths;
};

struct DatasetManifest {
  std::filesystem::path root;
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> entries;

  std::vector<const ManifestEntry*> split(const std::string& name) const;
  std::vector<std::string> classes() const;  // in first-appearance order
};

inline constexpr const char* kManifestName = "manifest.tsv";

DatasetManifest build_dataset(const DatasetConfig& config);
void write_manifest(const DatasetManifest& manifest);
// Reads root/manifest.tsv and checks that every referenced file exists.
DatasetManifest read_manifest(const std::filesystem::path& root);

}  // namespace fewpoint

#endif  // FEWPOINT_DATASET_HPP_

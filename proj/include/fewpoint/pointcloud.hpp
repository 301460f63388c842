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

#ifndef FEWPOINT_POINTCLOUD_HPP_
#define FEWPOINT_POINTCLOUD_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fewpoint/tensor.hpp"

namespace fewpoint {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
double distance(const Vec3& a, const Vec3& b);
double squared_distance(const Vec3& a, const Vec3& b);

// An ordered list of points that is semantically a multiset.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<Vec3> points) : points_(std::move(points)) {}

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Vec3& operator[](std::size_t i) const { return points_[i]; }
  Vec3& operator[](std::size_t i) { return points_[i]; }
  const std::vector<Vec3>& points() const { return points_; }
  std::vector<Vec3>& points() { return points_; }

  bool all_finite() const;

  // [n,3] tensor copy of the coordinates.
  Tensor to_tensor(bool requires_grad = false) const;
  static PointCloud from_tensor(const Tensor& t);

  PointCloud select(const std::vector<std::size_t>& indices) const;

 private:
  std::vector<Vec3> points_;
};

struct SamplePair {
  PointCloud partial;
  PointCloud gt;
  std::string class_label;
  std::string sample_id;
};

// True when both clouds contain the same points (as multisets) up to `tol`
// in every coordinate.
bool multiset_equal(const PointCloud& a, const PointCloud& b, double tol);
// True when every point of `sub` can be matched to a distinct point of `super`.
bool is_sub_multiset(const PointCloud& sub, const PointCloud& super, double tol);

// ASCII "x y z" per line. '#' lines and blank lines are skipped.
PointCloud read_xyz(const std::filesystem::path& path);
PointCloud parse_xyz(const std::string& text, const std::string& source = "<text>");
void write_xyz(const PointCloud& cloud, const std::filesystem::path& path);
std::string format_xyz(const PointCloud& cloud);

struct Normalization {
  Vec3 center{0.0, 0.0, 0.0};
  double scale = 1.0;

  Vec3 apply(const Vec3& p) const;
  Vec3 invert(const Vec3& p) const;
  PointCloud apply(const PointCloud& c) const;
  PointCloud invert(const PointCloud& c) const;
};

struct NormalizedCloud {
  PointCloud cloud;
  Normalization transform;
};

// Centers on the centroid and scales to unit max radius (scale 1 when all
// points coincide).
NormalizedCloud normalize(const PointCloud& cloud);

// k points drawn without replacement; deterministic in seed.
PointCloud random_subsample(const PointCloud& cloud, std::size_t k,
                            std::uint64_t seed);

// Greedy max-min selection starting at start_index; ties go to the lowest
// index.
std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud,
                                               std::size_t k,
                                               std::size_t start_index = 0);

// Keeps the points with p.normal <= t. The threshold is drawn (from seed) so
// that the kept fraction lies in [keep_fraction_min, kMaxKeepFraction].
inline constexpr double kMaxKeepFraction = 0.75;
PointCloud halfspace_crop(const PointCloud& cloud, const Vec3& normal,
                          double keep_fraction_min, std::uint64_t seed);

}  // namespace fewpoint

#endif  // FEWPOINT_POINTCLOUD_HPP_

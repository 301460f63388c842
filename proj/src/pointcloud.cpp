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

#include "fewpoint/pointcloud.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "fewpoint/errors.hpp"
#include "fewpoint/random.hpp"

namespace fewpoint {

double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

double distance(const Vec3& a, const Vec3& b) {
  return std::sqrt(squared_distance(a, b));
}

bool PointCloud::all_finite() const {
  for (const Vec3& p : points_)
    for (double v : p)
      if (!std::isfinite(v)) return false;
  return true;
}

Tensor PointCloud::to_tensor(bool requires_grad) const {
  if (points_.empty()) throw DegenerateInputError("empty point cloud");
  std::vector<double> data;
  data.reserve(points_.size() * 3);
  for (const Vec3& p : points_) data.insert(data.end(), p.begin(), p.end());
  return Tensor::from_data({points_.size(), 3}, std::move(data), requires_grad);
}

PointCloud PointCloud::from_tensor(const Tensor& t) {
  if (t.rank() != 2 || t.dim(1) != 3) {
    throw DimensionError("expected an [n,3] tensor, got " + shape_str(t.shape()));
  }
  std::vector<Vec3> pts(t.dim(0));
  const auto d = t.data();
  for (std::size_t i = 0; i < pts.size(); ++i)
    pts[i] = {d[3 * i], d[3 * i + 1], d[3 * i + 2]};
  return PointCloud(std::move(pts));
}

PointCloud PointCloud::select(const std::vector<std::size_t>& indices) const {
  std::vector<Vec3> pts;
  pts.reserve(indices.size());
  for (std::size_t i : indices) pts.push_back(points_.at(i));
  return PointCloud(std::move(pts));
}

namespace {

bool close(const Vec3& a, const Vec3& b, double tol) {
  return std::fabs(a[0] - b[0]) <= tol && std::fabs(a[1] - b[1]) <= tol &&
         std::fabs(a[2] - b[2]) <= tol;
}

}  // namespace

bool is_sub_multiset(const PointCloud& sub, const PointCloud& super, double tol) {
  if (sub.size() > super.size()) return false;
  std::vector<bool> used(super.size(), false);
  for (const Vec3& p : sub.points()) {
    bool found = false;
    for (std::size_t j = 0; j < super.size(); ++j) {
      if (!used[j] && close(p, super[j], tol)) {
        used[j] = true;
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

bool multiset_equal(const PointCloud& a, const PointCloud& b, double tol) {
  return a.size() == b.size() && is_sub_multiset(a, b, tol);
}

PointCloud parse_xyz(const std::string& text, const std::string& source) {
  std::vector<Vec3> pts;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    Vec3 p{};
    const char* cur = line.data();
    const char* end = line.data() + line.size();
    int fields = 0;
    while (true) {
      while (cur < end && (*cur == ' ' || *cur == '\t')) ++cur;
      if (cur == end) break;
      if (fields == 3) {
        throw ParseError(source + ": line " + std::to_string(line_no) +
                         ": expected 3 values, found more");
      }
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cur, end, v);
      if (ec != std::errc() || (ptr < end && *ptr != ' ' && *ptr != '\t')) {
        throw ParseError(source + ": line " + std::to_string(line_no) +
                         ": malformed number");
      }
      if (!std::isfinite(v)) {
        throw ParseError(source + ": line " + std::to_string(line_no) +
                         ": non-finite coordinate");
      }
      p[fields++] = v;
      cur = ptr;
    }
    if (fields != 3) {
      throw ParseError(source + ": line " + std::to_string(line_no) +
                       ": expected 3 values, found " + std::to_string(fields));
    }
    pts.push_back(p);
  }
  if (pts.empty()) throw DegenerateInputError(source + ": no points");
  return PointCloud(std::move(pts));
}

PointCloud read_xyz(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_xyz(ss.str(), path.string());
}

std::string format_xyz(const PointCloud& cloud) {
  std::string out;
  out.reserve(cloud.size() * 64);
  char buf[32];
  for (const Vec3& p : cloud.points()) {
    for (int k = 0; k < 3; ++k) {
      if (!std::isfinite(p[k])) {
        throw ContractError("refusing to write a non-finite coordinate");
      }
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), p[k]);
      (void)ec;
      out.append(buf, ptr);
      out.push_back(k == 2 ? '\n' : ' ');
    }
  }
  return out;
}

void write_xyz(const PointCloud& cloud, const std::filesystem::path& path) {
  const std::string text = format_xyz(cloud);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

Vec3 Normalization::apply(const Vec3& p) const {
  return {(p[0] - center[0]) / scale, (p[1] - center[1]) / scale,
          (p[2] - center[2]) / scale};
}

Vec3 Normalization::invert(const Vec3& p) const {
  return {p[0] * scale + center[0], p[1] * scale + center[1],
          p[2] * scale + center[2]};
}

PointCloud Normalization::apply(const PointCloud& c) const {
  std::vector<Vec3> pts;
  pts.reserve(c.size());
  for (const Vec3& p : c.points()) pts.push_back(apply(p));
  return PointCloud(std::move(pts));
}

PointCloud Normalization::invert(const PointCloud& c) const {
  std::vector<Vec3> pts;
  pts.reserve(c.size());
  for (const Vec3& p : c.points()) pts.push_back(invert(p));
  return PointCloud(std::move(pts));
}

NormalizedCloud normalize(const PointCloud& cloud) {
  if (cloud.empty()) throw DegenerateInputError("normalize: empty cloud");
  Normalization t;
  for (const Vec3& p : cloud.points())
    for (int k = 0; k < 3; ++k) t.center[k] += p[k];
  for (int k = 0; k < 3; ++k) t.center[k] /= static_cast<double>(cloud.size());
  double r = 0.0;
  for (const Vec3& p : cloud.points()) r = std::max(r, distance(p, t.center));
  t.scale = r > 0.0 ? r : 1.0;
  return {t.apply(cloud), t};
}

PointCloud random_subsample(const PointCloud& cloud, std::size_t k,
                            std::uint64_t seed) {
  if (k == 0 || k > cloud.size()) {
    throw ContractError("random_subsample: k=" + std::to_string(k) +
                        " not in [1, " + std::to_string(cloud.size()) + "]");
  }
  std::vector<std::size_t> idx(cloud.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return cloud.select(idx);
}

std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud,
                                               std::size_t k,
                                               std::size_t start_index) {
  const std::size_t n = cloud.size();
  if (k == 0 || k > n) {
    throw ContractError("farthest_point_sample: k=" + std::to_string(k) +
                        " not in [1, " + std::to_string(n) + "]");
  }
  if (start_index >= n) {
    throw ContractError("farthest_point_sample: start index out of range");
  }
  std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> out;
  out.reserve(k);
  std::size_t cur = start_index;
  for (std::size_t s = 0; s < k; ++s) {
    out.push_back(cur);
    min_d[cur] = -1.0;
    std::size_t best = n;
    double best_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (min_d[i] < 0.0) continue;
      min_d[i] = std::min(min_d[i], squared_distance(cloud[i], cloud[cur]));
      if (min_d[i] > best_d) {
        best_d = min_d[i];
        best = i;
      }
    }
    if (best == n) break;
    cur = best;
  }
  return out;
}

PointCloud halfspace_crop(const PointCloud& cloud, const Vec3& normal,
                          double keep_fraction_min, std::uint64_t seed) {
  if (dot(normal, normal) == 0.0) {
    throw ContractError("halfspace_crop: zero normal");
  }
  const std::size_t n = cloud.size();
  const auto lo = static_cast<std::size_t>(
      std::max(1.0, std::ceil(keep_fraction_min * static_cast<double>(n) - 1e-12)));
  const auto hi = static_cast<std::size_t>(
      std::floor(kMaxKeepFraction * static_cast<double>(n) + 1e-12));
  if (n == 0 || lo > hi) {
    throw DegenerateInputError("halfspace_crop: " + std::to_string(n) +
                               " points cannot keep a fraction in [" +
                               std::to_string(keep_fraction_min) + ", 0.75]");
  }
  std::vector<double> proj(n);
  for (std::size_t i = 0; i < n; ++i) proj[i] = dot(cloud[i], normal);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return proj[a] < proj[b]; });

  Rng rng(seed);
  const std::size_t target = lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
  // Ties in the projection can push the kept count past the drawn target;
  // walk outwards from it until a threshold lands inside the allowed range.
  auto kept_for = [&](std::size_t m) {
    const double t = proj[order[m - 1]];
    return static_cast<std::size_t>(
        std::upper_bound(order.begin(), order.end(), t,
                         [&](double v, std::size_t i) { return v < proj[i]; }) -
        order.begin());
  };
  std::size_t chosen = 0;
  for (std::size_t delta = 0; delta <= hi - lo && chosen == 0; ++delta) {
    for (std::size_t m : {target - std::min(delta, target - lo), target + delta}) {
      if (m < lo || m > hi) continue;
      const std::size_t kept = kept_for(m);
      if (kept >= lo && kept <= hi) {
        chosen = m;
        break;
      }
    }
  }
  if (chosen == 0) {
    throw DegenerateInputError("halfspace_crop: tied projections prevent a valid crop");
  }
  const double t = proj[order[chosen - 1]];
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < n; ++i)
    if (proj[i] <= t) pts.push_back(cloud[i]);
  return PointCloud(std::move(pts));
}

}  // namespace fewpoint

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

#include "fewpoint/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>

#include "fewpoint/errors.hpp"
#include "fewpoint/random.hpp"

namespace fewpoint {

namespace {

constexpr double kPi = std::numbers::pi;

using Sampler = std::function<Vec3(Rng&)>;

// Picks a surface part with probability proportional to its area.
std::size_t pick_part(const std::vector<double>& areas, Rng& rng) {
  double total = 0.0;
  for (double a : areas) total += a;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i + 1 < areas.size(); ++i) {
    if (u < areas[i]) return i;
    u -= areas[i];
  }
  return areas.size() - 1;
}

Vec3 unit_sphere(Rng& rng) {
  for (;;) {
    const Vec3 p{rng.normal(), rng.normal(), rng.normal()};
    const double r = std::sqrt(dot(p, p));
    if (r > 1e-12) return {p[0] / r, p[1] / r, p[2] / r};
  }
}

// Disc of radius r in the xy plane at height z.
Vec3 disc(Rng& rng, double r, double z) {
  const double rho = r * std::sqrt(rng.uniform());
  const double t = 2.0 * kPi * rng.uniform();
  return {rho * std::cos(t), rho * std::sin(t), z};
}

Sampler sphere_sampler(Rng& rng) {
  const double r = rng.uniform(0.5, 1.5);
  return [r](Rng& g) {
    const Vec3 u = unit_sphere(g);
    return Vec3{r * u[0], r * u[1], r * u[2]};
  };
}

Sampler cuboid_sampler(Rng& rng) {
  const Vec3 e{rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0)};
  // Face pairs normal to x, y, z.
  const std::vector<double> areas{e[1] * e[2], e[0] * e[2], e[0] * e[1]};
  return [e, areas](Rng& g) {
    const std::size_t axis = pick_part(areas, g);
    Vec3 p;
    for (std::size_t k = 0; k < 3; ++k) p[k] = g.uniform(-e[k], e[k]);
    p[axis] = g.uniform() < 0.5 ? -e[axis] : e[axis];
    return p;
  };
}

Sampler cylinder_sampler(Rng& rng) {
  const double r = rng.uniform(0.3, 0.8), h = rng.uniform(0.4, 1.2);
  const std::vector<double> areas{2.0 * kPi * r * 2.0 * h, kPi * r * r, kPi * r * r};
  return [r, h, areas](Rng& g) {
    const std::size_t part = pick_part(areas, g);
    if (part == 0) {
      const double t = 2.0 * kPi * g.uniform();
      return Vec3{r * std::cos(t), r * std::sin(t), g.uniform(-h, h)};
    }
    return disc(g, r, part == 1 ? -h : h);
  };
}

Sampler cone_sampler(Rng& rng) {
  const double r = rng.uniform(0.4, 1.0), h = rng.uniform(0.8, 2.0);
  const double slant = std::sqrt(r * r + h * h);
  const std::vector<double> areas{kPi * r * slant, kPi * r * r};
  return [r, h, areas](Rng& g) {
    if (pick_part(areas, g) == 1) return disc(g, r, 0.0);
    // Lateral area grows linearly with distance from the apex.
    const double s = std::sqrt(g.uniform());
    const double t = 2.0 * kPi * g.uniform();
    return Vec3{s * r * std::cos(t), s * r * std::sin(t), h * (1.0 - s)};
  };
}

Sampler torus_sampler(Rng& rng) {
  const double big = rng.uniform(0.6, 1.0), small = rng.uniform(0.15, 0.4);
  return [big, small](Rng& g) {
    for (;;) {
      const double u = 2.0 * kPi * g.uniform(), v = 2.0 * kPi * g.uniform();
      // Area element is proportional to (R + r cos v).
      if (g.uniform() * (big + small) <= big + small * std::cos(v)) {
        const double w = big + small * std::cos(v);
        return Vec3{w * std::cos(u), w * std::sin(u), small * std::sin(v)};
      }
    }
  };
}

Sampler capsule_sampler(Rng& rng) {
  const double r = rng.uniform(0.25, 0.5), h = rng.uniform(0.3, 0.9);
  const std::vector<double> areas{2.0 * kPi * r * 2.0 * h, 4.0 * kPi * r * r};
  return [r, h, areas](Rng& g) {
    if (pick_part(areas, g) == 0) {
      const double t = 2.0 * kPi * g.uniform();
      return Vec3{r * std::cos(t), r * std::sin(t), g.uniform(-h, h)};
    }
    const Vec3 u = unit_sphere(g);
    return Vec3{r * u[0], r * u[1], r * u[2] + (u[2] >= 0.0 ? h : -h)};
  };
}

Sampler ellipsoid_sampler(Rng& rng) {
  const Vec3 a{rng.uniform(0.4, 1.2), rng.uniform(0.4, 1.2), rng.uniform(0.4, 1.2)};
  const double gmax = 1.0 / std::min({a[0], a[1], a[2]});
  return [a, gmax](Rng& g) {
    for (;;) {
      const Vec3 u = unit_sphere(g);
      // Surface stretch of the map u -> diag(a) u, up to the constant abc.
      const double s = std::sqrt(u[0] * u[0] / (a[0] * a[0]) + u[1] * u[1] / (a[1] * a[1]) +
                                 u[2] * u[2] / (a[2] * a[2]));
      if (g.uniform() * gmax <= s) return Vec3{a[0] * u[0], a[1] * u[1], a[2] * u[2]};
    }
  };
}

Sampler prism_sampler(Rng& rng) {
  // Triangle with vertices at random angles on a circle, extruded along z.
  std::array<double, 3> ang{rng.uniform(0.0, 0.6), rng.uniform(1.8, 2.6), rng.uniform(3.8, 4.6)};
  std::array<std::array<double, 2>, 3> v;
  for (int i = 0; i < 3; ++i) v[i] = {std::cos(ang[i]), std::sin(ang[i])};
  const double h = rng.uniform(0.3, 1.0);
  auto edge = [&](int i) {
    const int j = (i + 1) % 3;
    return std::hypot(v[j][0] - v[i][0], v[j][1] - v[i][1]);
  };
  const double tri = 0.5 * std::abs((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) -
                                    (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]));
  const std::vector<double> areas{tri, tri, edge(0) * 2 * h, edge(1) * 2 * h, edge(2) * 2 * h};
  return [v, h, areas](Rng& g) {
    const std::size_t part = pick_part(areas, g);
    if (part < 2) {
      double s = g.uniform(), t = g.uniform();
      if (s + t > 1.0) {
        s = 1.0 - s;
        t = 1.0 - t;
      }
      return Vec3{v[0][0] + s * (v[1][0] - v[0][0]) + t * (v[2][0] - v[0][0]),
                  v[0][1] + s * (v[1][1] - v[0][1]) + t * (v[2][1] - v[0][1]),
                  part == 0 ? -h : h};
    }
    const int i = static_cast<int>(part - 2), j = (i + 1) % 3;
    const double s = g.uniform();
    return Vec3{v[i][0] + s * (v[j][0] - v[i][0]), v[i][1] + s * (v[j][1] - v[i][1]),
                g.uniform(-h, h)};
  };
}

// Shapes symmetric under p -> -p are sampled in antithetic pairs, which puts
// their centroid exactly at the symmetry centre.
bool centrally_symmetric(const std::string& c) { return c != "cone" && c != "prism"; }

}  // namespace

const std::vector<std::string>& shape_classes() {
  static const std::vector<std::string> names{"sphere",  "cuboid",  "cylinder",  "cone",
                                              "torus",   "capsule", "ellipsoid", "prism"};
  return names;
}

PointCloud generate_shape(const std::string& shape_class, std::size_t n_points,
                          std::uint64_t seed) {
  if (n_points < 16) throw ContractError("generate_shape: need at least 16 points");
  Rng rng(seed);
  Sampler sample;
  if (shape_class == "sphere") sample = sphere_sampler(rng);
  else if (shape_class == "cuboid") sample = cuboid_sampler(rng);
  else if (shape_class == "cylinder") sample = cylinder_sampler(rng);
  else if (shape_class == "cone") sample = cone_sampler(rng);
  else if (shape_class == "torus") sample = torus_sampler(rng);
  else if (shape_class == "capsule") sample = capsule_sampler(rng);
  else if (shape_class == "ellipsoid") sample = ellipsoid_sampler(rng);
  else if (shape_class == "prism") sample = prism_sampler(rng);
  else throw ContractError("generate_shape: unknown class '" + shape_class + "'");

  std::vector<Vec3> pts;
  pts.reserve(n_points);
  if (centrally_symmetric(shape_class)) {
    std::size_t pairs = n_points / 2;
    if (shape_class == "sphere" && n_points % 2) {
      // Odd counts: three points 120 degrees apart on a great circle also sum
      // to zero, so every point stays on the sphere after centring.
      --pairs;
      const Vec3 p = sample(rng);
      const double r = std::sqrt(dot(p, p));
      for (int k = 0; k < 3; ++k) {
        const double t = 2.0 * kPi * k / 3.0;
        pts.push_back({r * std::cos(t), r * std::sin(t), 0.0});
      }
    }
    for (std::size_t i = 0; i < pairs; ++i) {
      const Vec3 p = sample(rng);
      pts.push_back(p);
      pts.push_back({-p[0], -p[1], -p[2]});
    }
    while (pts.size() < n_points) pts.push_back(sample(rng));
  } else {
    for (std::size_t i = 0; i < n_points; ++i) pts.push_back(sample(rng));
  }
  return normalize(PointCloud(std::move(pts))).cloud;
}

SamplePair make_pair(const PointCloud& gt, std::uint64_t view_seed, const PairConfig& config) {
  Rng rng(view_seed);
  Vec3 normal;
  do {
    normal = {rng.normal(), rng.normal(), rng.normal()};
  } while (dot(normal, normal) < 1e-12);
  const PointCloud crop =
      halfspace_crop(gt, normal, config.keep_fraction_min, rng.next_u64());
  if (crop.size() < config.partial_points) {
    throw DegenerateInputError("make_pair: crop kept " + std::to_string(crop.size()) +
                               " points, fewer than the " +
                               std::to_string(config.partial_points) + " requested");
  }
  SamplePair pair;
  pair.gt = gt;
  pair.partial = random_subsample(crop, config.partial_points, rng.next_u64());
  return pair;
}

std::vector<const ManifestEntry*> DatasetManifest::split(const std::string& name) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries)
    if (e.split == name) out.push_back(&e);
  return out;
}

std::vector<std::string> DatasetManifest::classes() const {
  std::vector<std::string> out;
  for (const auto& e : entries)
    if (std::find(out.begin(), out.end(), e.class_label) == out.end())
      out.push_back(e.class_label);
  return out;
}

DatasetManifest build_dataset(const DatasetConfig& config) {
  if (config.classes == 0 || config.classes > shape_classes().size()) {
    throw ContractError("build_dataset: classes must be in [1, " +
                        std::to_string(shape_classes().size()) + "]");
  }
  if (config.partial_points == 0 || config.partial_points > config.gt_points) {
    throw ContractError("build_dataset: partial_points must be in [1, gt_points]");
  }
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(config.root / "gt", ec);
  if (!ec) fs::create_directories(config.root / "partial", ec);
  if (ec) {
    throw IoError("cannot create dataset directories under " + config.root.string() + ": " +
                  ec.message());
  }

  DatasetManifest manifest;
  manifest.root = config.root;
  manifest.seed = config.seed;
  const PairConfig pair_cfg{config.partial_points, config.keep_fraction_min};
  struct Split {
    const char* name;
    std::size_t count, views;
  };
  const Split splits[] = {{"train", config.train_per_class, config.train_views},
                          {"val", config.val_per_class, config.test_views},
                          {"test", config.test_per_class, config.test_views}};
  for (std::size_t c = 0; c < config.classes; ++c) {
    const std::string& cls = shape_classes()[c];
    for (const Split& sp : splits) {
      for (std::size_t i = 0; i < sp.count; ++i) {
        char num[24];
        std::snprintf(num, sizeof num, "%03zu", i);
        ManifestEntry e;
        e.sample_id = cls + "_" + sp.name + "_" + num;
        e.class_label = cls;
        e.split = sp.name;
        const PointCloud gt =
            generate_shape(cls, config.gt_points, derive_seed(config.seed, e.sample_id));
        e.gt_path = "gt/" + e.sample_id + ".xyz";
        write_xyz(gt, config.root / e.gt_path);
        for (std::size_t v = 0; v < sp.views; ++v) {
          const std::uint64_t view_seed =
              derive_seed(config.seed, e.sample_id + ":view" + std::to_string(v));
          const SamplePair pair = make_pair(gt, view_seed, pair_cfg);
          e.partial_paths.push_back("partial/" + e.sample_id + "_v" + std::to_string(v) + ".xyz");
          write_xyz(pair.partial, config.root / e.partial_paths.back());
        }
        manifest.entries.push_back(std::move(e));
      }
    }
  }
  write_manifest(manifest);
  return manifest;
}

void write_manifest(const DatasetManifest& manifest) {
  const auto path = manifest.root / kManifestName;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "# fewpoint manifest seed=" << manifest.seed << "\n";
  for (const auto& e : manifest.entries) {
    out << e.sample_id << '\t' << e.class_label << '\t' << e.split << '\t' << e.gt_path << '\t';
    for (std::size_t i = 0; i < e.partial_paths.size(); ++i) {
      if (i) out << ';';
      out << e.partial_paths[i];
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

DatasetManifest read_manifest(const std::filesystem::path& root) {
  const auto path = root / kManifestName;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  DatasetManifest m;
  m.root = root;
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("seed=");
      if (pos != std::string::npos) m.seed = std::stoull(line.substr(pos + 5));
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (cols.size() != 5) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                       ": expected 5 tab-separated columns, got " + std::to_string(cols.size()));
    }
    ManifestEntry e{cols[0], cols[1], cols[2], cols[3], {}};
    if (e.split != "train" && e.split != "val" && e.split != "test") {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": unknown split '" +
                       e.split + "'");
    }
    std::stringstream ps(cols[4]);
    while (std::getline(ps, col, ';'))
      if (!col.empty()) e.partial_paths.push_back(col);
    if (e.partial_paths.empty()) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": no partial views");
    }
    if (!ids.insert(e.sample_id).second) {
      throw ParseError(path.string() + ": duplicate sample id '" + e.sample_id + "'");
    }
    for (const std::string* f : {&e.gt_path}) {
      if (!std::filesystem::exists(root / *f)) throw IoError("missing file " + (root / *f).string());
    }
    for (const auto& f : e.partial_paths) {
      if (!std::filesystem::exists(root / f)) throw IoError("missing file " + (root / f).string());
    }
    m.entries.push_back(std::move(e));
  }
  if (m.entries.empty()) throw DegenerateInputError("manifest " + path.string() + " has no entries");
  return m;
}

}  // namespace fewpoint

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fewpoint/dataset.hpp"
#include "fewpoint/errors.hpp"
#include "fixtures.hpp"

using namespace fewpoint;
using namespace fewpoint::testing;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> tree(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[std::filesystem::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

DatasetConfig small_config(const std::filesystem::path& root) {
  DatasetConfig c;
  c.root = root;
  c.train_per_class = 2;
  c.val_per_class = 1;
  c.test_per_class = 1;
  c.gt_points = 64;
  c.partial_points = 16;
  return c;
}

}  // namespace

TEST_CASE("sphere samples lie on the unit sphere") {
  for (std::size_t n : {16, 17, 512}) {
    const PointCloud s = generate_shape("sphere", n, 3);
    CHECK(s.size() == n);
    for (const auto& p : s.points()) CHECK(std::abs(std::sqrt(dot(p, p)) - 1.0) < 1e-6);
  }
}

TEST_CASE("cuboid samples lie on a face") {
  const PointCloud c = generate_shape("cuboid", 512, 4);
  Vec3 extent{0, 0, 0};
  for (const auto& p : c.points())
    for (int k = 0; k < 3; ++k) extent[k] = std::max(extent[k], std::abs(p[k]));
  for (const auto& p : c.points()) {
    bool on_face = false;
    for (int k = 0; k < 3; ++k) on_face |= std::abs(std::abs(p[k]) - extent[k]) < 1e-6;
    CHECK(on_face);
  }
}

TEST_CASE("every class is deterministic and normalised") {
  for (const auto& cls : shape_classes()) {
    CAPTURE(cls);
    const PointCloud a = generate_shape(cls, 256, 9);
    const PointCloud b = generate_shape(cls, 256, 9);
    CHECK(a.points() == b.points());
    CHECK(generate_shape(cls, 256, 10).points() != a.points());
    Vec3 c{0, 0, 0};
    double r = 0.0;
    for (const auto& p : a.points()) {
      for (int k = 0; k < 3; ++k) c[k] += p[k] / 256.0;
      r = std::max(r, std::sqrt(dot(p, p)));
    }
    CHECK(std::sqrt(dot(c, c)) < 1e-9);
    CHECK(std::abs(r - 1.0) < 1e-9);
  }
  CHECK(shape_classes().size() == 8);
}

TEST_CASE("generate_shape errors") {
  CHECK_THROWS_AS(generate_shape("teapot", 64, 1), ContractError);
  CHECK_THROWS_AS(generate_shape("sphere", 15, 1), ContractError);
}

TEST_CASE("make_pair crops and subsamples from the gt") {
  const PointCloud gt = generate_shape("torus", 512, 5);
  PairConfig cfg;
  const SamplePair p = make_pair(gt, 77, cfg);
  CHECK(p.partial.size() == cfg.partial_points);
  CHECK(is_sub_multiset(p.partial, gt, 0.0));
  CHECK(make_pair(gt, 77, cfg).partial.points() == p.partial.points());
}

TEST_CASE("eight view seeds give eight distinct partials") {
  PairConfig cfg;
  for (int s = 0; s < 100; ++s) {
    const PointCloud gt = generate_shape(shape_classes()[s % 8], 128, 1000 + s);
    cfg.partial_points = 32;
    std::set<std::vector<Vec3>> seen;
    for (int v = 0; v < 8; ++v) {
      const SamplePair p = make_pair(gt, derive_seed(1000 + s, "view" + std::to_string(v)), cfg);
      REQUIRE(is_sub_multiset(p.partial, gt, 0.0));
      seen.insert(p.partial.points());
    }
    CHECK(seen.size() == 8);
  }
}

TEST_CASE("build_dataset writes a consistent, balanced, reproducible tree") {
  TempDir a("ds_a"), b("ds_b");
  const DatasetManifest m = build_dataset(small_config(a.path()));
  build_dataset(small_config(b.path()));
  CHECK(tree(a.path()) == tree(b.path()));

  const DatasetManifest r = read_manifest(a.path());
  CHECK(r.entries.size() == m.entries.size());
  CHECK(r.entries.size() == 8 * (2 + 1 + 1));
  CHECK(r.classes() == shape_classes());
  std::map<std::string, std::map<std::string, int>> counts;
  for (const auto& e : r.entries) {
    ++counts[e.split][e.class_label];
    CHECK(std::filesystem::exists(a.path() / e.gt_path));
    for (const auto& p : e.partial_paths) CHECK(std::filesystem::exists(a.path() / p));
    CHECK(e.partial_paths.size() == (e.split == "train" ? 8u : 1u));
    const PointCloud gt = read_xyz(a.path() / e.gt_path);
    CHECK(gt.size() == 64);
    const PointCloud part = read_xyz(a.path() / e.partial_paths[0]);
    CHECK(part.size() == 16);
    CHECK(is_sub_multiset(part, gt, 1e-12));
  }
  for (const auto& cls : shape_classes()) {
    CHECK(counts["train"][cls] == 2);
    CHECK(counts["val"][cls] == 1);
    CHECK(counts["test"][cls] == 1);
  }
  CHECK(r.split("test").size() == 8);
  CHECK(r.seed == 1);
}

TEST_CASE("xyz round trip keeps gt clouds normalised") {
  TempDir d("ds_norm");
  build_dataset(small_config(d.path()));
  for (const auto& e : read_manifest(d.path()).entries) {
    const PointCloud gt = read_xyz(d.path() / e.gt_path);
    Vec3 c{0, 0, 0};
    double r = 0.0;
    for (const auto& p : gt.points()) {
      for (int k = 0; k < 3; ++k) c[k] += p[k] / static_cast<double>(gt.size());
      r = std::max(r, std::sqrt(dot(p, p)));
    }
    CHECK(std::sqrt(dot(c, c)) < 1e-9);
    CHECK(std::abs(r - 1.0) < 1e-9);
  }
}

TEST_CASE("manifest validation") {
  TempDir d("ds_bad");
  build_dataset(small_config(d.path()));
  const auto path = d.path() / kManifestName;
  const std::string good = slurp(path);

  auto write = [&](const std::string& text) {
    std::ofstream(path, std::ios::binary) << text;
  };
  // Drop one referenced file.
  const DatasetManifest m = read_manifest(d.path());
  std::filesystem::remove(d.path() / m.entries[3].gt_path);
  CHECK_THROWS_AS(read_manifest(d.path()), IoError);
  build_dataset(small_config(d.path()));

  const auto first_row = good.find('\n') + 1;
  const auto row_end = good.find('\n', first_row) + 1;
  const std::string row = good.substr(first_row, row_end - first_row);
  write(good + row);
  CHECK_THROWS_AS(read_manifest(d.path()), ParseError);
  write("# fewpoint manifest seed=1\nid\tsphere\tholdout\tgt/x.xyz\tp.xyz\n");
  CHECK_THROWS_AS(read_manifest(d.path()), ParseError);
  write("# fewpoint manifest seed=1\nid\tsphere\ttrain\n");
  CHECK_THROWS_AS(read_manifest(d.path()), ParseError);
  CHECK_THROWS_AS(read_manifest(d.path() / "nowhere"), IoError);
}

TEST_CASE("build_dataset reports the path it cannot write") {
  TempDir d("ds_ro");
  const auto blocker = d.path() / "file";
  std::ofstream(blocker) << "x";
  DatasetConfig c = small_config(blocker / "sub");
  try {
    build_dataset(c);
    FAIL("expected an IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find((blocker / "sub").string()) != std::string::npos);
  }
  c = small_config(d.path() / "x");
  c.classes = 9;
  CHECK_THROWS_AS(build_dataset(c), ContractError);
}

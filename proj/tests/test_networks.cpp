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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fewpoint/decoder.hpp"
#include "fewpoint/encoder.hpp"
#include "fewpoint/errors.hpp"
#include "fewpoint/metrics.hpp"
#include "fewpoint/model.hpp"
#include "fewpoint/ops.hpp"
#include "fixtures.hpp"
#include "gradcheck.hpp"

using namespace fewpoint;
using namespace fewpoint::testing;

namespace {

PointCloud permuted(const PointCloud& c, Rng& rng) {
  std::vector<std::size_t> idx(c.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return c.select(idx);
}

void zero(Tensor& t) {
  for (double& v : t.mutable_data()) v = 0.0;
}

std::vector<Tensor> params_of(const ParamStore& store, const std::string& prefix = "") {
  return store.with_prefix(prefix);
}

}  // namespace

TEST_CASE("linear and mlp shapes") {
  ParamStore store;
  Rng rng(1);
  Linear l(store, "l", 3, 5, rng);
  CHECK(l.weight().shape() == Shape{3, 5});
  CHECK(l.bias().shape() == Shape{5});
  for (double b : l.bias().data()) CHECK(b == 0.0);
  for (double w : l.weight().data()) CHECK(std::abs(w) <= 1.0 / std::sqrt(3.0));
  Mlp m(store, "m", 3, {4, 2}, rng, 0.2, false);
  CHECK(m.out_features() == 2);
  CHECK(m.forward(Tensor::zeros({7, 3})).shape() == Shape{7, 2});
  CHECK(m.forward_all(Tensor::zeros({7, 3})).size() == 2);
  CHECK_THROWS_AS(l.forward(Tensor::zeros({2, 4})), DimensionError);
  CHECK_THROWS_AS(store.add("l.weight", Tensor::zeros({1})), ContractError);
}

TEST_CASE("param hash tracks values and freezing restores flags") {
  ParamStore store;
  Rng rng(2);
  Linear a(store, "a", 2, 2, rng);
  Linear b(store, "b", 2, 2, rng);
  const auto ha = store.hash("a."), hb = store.hash("b.");
  a.weight().mutable_data()[0] += 1e-12;
  CHECK(store.hash("a.") != ha);
  CHECK(store.hash("b.") == hb);
  {
    ScopedFreeze f(store.with_prefix("a."));
    CHECK_FALSE(a.weight().requires_grad());
    CHECK(b.weight().requires_grad());
  }
  CHECK(a.weight().requires_grad());
}

TEST_CASE("pn_cmlp and t_cmlp widths at default sizes") {
  ParamStore store;
  Rng rng(3);
  Encoder enc(store, EncoderConfig{}, rng);
  NoGradGuard ng;
  Rng data(4);
  const Tensor small = random_cloud(16, data).to_tensor();
  CHECK(enc.pn_cmlp(small).numel() == 256 + 512 + 1024);
  CHECK(enc.t_cmlp(small).numel() == 1792);
  CHECK(enc.t_cmlp(random_cloud(2048, data).to_tensor()).numel() == 1792);
  CHECK(enc.encode(small).numel() == 1024);
  CHECK(enc.pn_cmlp(random_cloud(1, data).to_tensor()).numel() == 1792);
}

TEST_CASE("fuse of zero inputs with zero bias is zero") {
  ParamStore store;
  Rng rng(5);
  Encoder enc(store, EncoderConfig{}, rng);
  const Tensor z = Tensor::zeros({1792});
  const Tensor out = enc.fuse(z, z);
  CHECK(out.numel() == 1024);
  for (double v : out.data()) CHECK(v == 0.0);
  CHECK_THROWS_AS(enc.fuse(Tensor::zeros({5}), z), DimensionError);
}

TEST_CASE("fuse gradient matches finite differences") {
  const Config c = mini_config();
  ParamStore store;
  Rng rng(6);
  Encoder enc(store, c.encoder, rng);
  const std::size_t w = c.encoder.pooled_width();
  for (int trial = 0; trial < 20; ++trial) {
    Tensor a = random_tensor({w}, rng), b = random_tensor({w}, rng);
    std::vector<Tensor> leaves{a, b};
    for (const auto& p : params_of(store, "encoder.fuse")) leaves.push_back(p);
    const Tensor wsum = random_tensor({1, c.encoder.mgfv_dim}, rng, -1, 1, false);
    CHECK(gradcheck([&] { return sum(mul(enc.fuse(a, b), wsum)); }, leaves) < 1e-4);
  }
}

TEST_CASE("encoder is permutation invariant") {
  const Config c = desk_config();
  ParamStore store;
  Rng rng(7);
  Encoder enc(store, c.encoder, rng);
  NoGradGuard ng;
  Rng data(8);
  for (std::size_t n : {16, 128, 512}) {
    for (int trial = 0; trial < 4; ++trial) {
      const PointCloud p = random_cloud(n, data);
      const Tensor ref = enc.encode(p.to_tensor());
      CHECK(max_rel_diff(enc.encode(permuted(p, data).to_tensor()), ref) < 1e-5);
    }
  }
}

TEST_CASE("attention rows sum to one and attention is permutation equivariant") {
  const Config c = desk_config();
  ParamStore store;
  Rng rng(9);
  Encoder enc(store, c.encoder, rng);
  Rng data(10);
  const PointCloud p = random_cloud(40, data);
  std::vector<Tensor> att;
  const Tensor pooled = enc.t_cmlp(p.to_tensor(), &att);
  REQUIRE(att.size() == c.encoder.attention_blocks);
  const Tensor& a = att[0];
  for (std::size_t i = 0; i < a.dim(0); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.dim(1); ++j) s += a.data()[i * a.dim(1) + j];
    CHECK(std::abs(s - 1.0) < 1e-6);
  }
  CHECK(max_rel_diff(enc.t_cmlp(permuted(p, data).to_tensor()), pooled) < 1e-5);
}

TEST_CASE("encode is pure and pn branch ignores duplicates") {
  const Config c = desk_config();
  ParamStore store;
  Rng rng(11);
  Encoder enc(store, c.encoder, rng);
  Rng data(12);
  const PointCloud p = random_cloud(30, data);
  CHECK(flat(enc.encode(p.to_tensor())) == flat(enc.encode(p.to_tensor())));
  std::vector<Vec3> doubled = p.points();
  doubled.insert(doubled.end(), p.points().begin(), p.points().end());
  CHECK(max_rel_diff(enc.pn_cmlp(PointCloud(doubled).to_tensor()), enc.pn_cmlp(p.to_tensor())) <
        1e-6);
}

TEST_CASE("encoder output is finite from 1 to 4096 points") {
  const Config c = desk_config();
  ParamStore store;
  Rng rng(13);
  Encoder enc(store, c.encoder, rng);
  NoGradGuard ng;
  Rng data(14);
  for (std::size_t n : {1, 2, 17, 4096}) {
    const Tensor f = enc.encode(random_cloud(n, data).to_tensor());
    for (double v : f.data()) CHECK(std::isfinite(v));
  }
  CHECK_THROWS_AS(enc.encode(Tensor::zeros({3, 2})), DimensionError);
}

TEST_CASE("single-branch encoder rejects the transformer path") {
  Config c = desk_config();
  c.encoder.use_transformer_branch = false;
  ParamStore store;
  Rng rng(15);
  Encoder enc(store, c.encoder, rng);
  const Tensor pts = Tensor::zeros({4, 3});
  CHECK_THROWS_AS(enc.t_cmlp(pts), ContractError);
  CHECK(enc.encode(pts).numel() == c.encoder.mgfv_dim);
  CHECK(store.names_with_prefix("encoder.t.").empty());
}

TEST_CASE("encoder gradients match finite differences") {
  const Config c = mini_config();
  for (int trial = 0; trial < 20; ++trial) {
    ParamStore store;
    Rng rng(100 + trial);
    Encoder enc(store, c.encoder, rng);
    randomize_biases(store, rng);
    const Tensor pts = random_cloud(6, rng).to_tensor(true);
    const Tensor w = random_tensor({1, c.encoder.mgfv_dim}, rng, -1, 1, false);
    std::vector<Tensor> leaves = params_of(store);
    leaves.push_back(pts);
    CHECK(gradcheck([&] { return sum(mul(enc.encode(pts), w)); }, leaves) < 1e-4);
  }
}

TEST_CASE("coarse generator shape, zero case and gradient") {
  const Config c = desk_config();
  ParamStore store;
  Rng rng(16);
  Decoder dec(store, c.decoder, c.encoder.mgfv_dim, rng);
  const Tensor coarse = dec.coarse_generate(Tensor::zeros({1, c.encoder.mgfv_dim}));
  CHECK(coarse.shape() == Shape{c.decoder.coarse_n, 3});
  for (double v : coarse.data()) CHECK(v == 0.0);

  const Config m = mini_config();
  ParamStore s2;
  Decoder mini(s2, m.decoder, m.encoder.mgfv_dim, rng);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor f = random_tensor({1, m.encoder.mgfv_dim}, rng);
    const Tensor target = random_cloud(5, rng).to_tensor();
    CHECK(gradcheck([&] { return chamfer_loss(mini.coarse_generate(f), target); }, {f}) < 1e-4);
  }
}

TEST_CASE("local features: shape, translation invariance and zero offsets") {
  const Config c = desk_config();
  ParamStore store;
  Rng rng(17);
  Decoder dec(store, c.decoder, c.encoder.mgfv_dim, rng);
  const PointCloud coarse = random_cloud(c.decoder.coarse_n, rng, 0.5);
  const Tensor f = dec.local_features(coarse.to_tensor());
  CHECK(f.shape() == Shape{c.decoder.coarse_n, c.decoder.local_dim});

  PointCloud moved = coarse;
  for (auto& p : moved.points()) p = {p[0] + 0.3, p[1] - 0.7, p[2] + 1.1};
  CHECK(max_rel_diff(dec.local_features(moved.to_tensor()), f) < 1e-6);

  // All points coincide: every group is all zero offsets, so every row is
  // the local MLP applied to the origin.
  const PointCloud same(std::vector<Vec3>(c.decoder.coarse_n, Vec3{0.2, 0.1, -0.4}));
  const Tensor g = dec.local_features(same.to_tensor());
  for (std::size_t i = 1; i < g.dim(0); ++i)
    for (std::size_t j = 0; j < g.dim(1); ++j)
      CHECK(g.data()[i * g.dim(1) + j] == g.data()[j]);
}

TEST_CASE("fold: detail size and zero final layer") {
  const Config c = desk_config();
  ParamStore store;
  Rng rng(18);
  Decoder dec(store, c.decoder, c.encoder.mgfv_dim, rng);
  const Tensor mgfv = random_tensor({1, c.encoder.mgfv_dim}, rng, -1, 1, false);
  const DecodedClouds out = dec.decode(mgfv);
  CHECK(out.coarse.shape() == Shape{c.decoder.coarse_n, 3});
  CHECK(out.detail.shape() == Shape{c.decoder.detail_n(), 3});
  CHECK(out.detail.dim(0) / out.coarse.dim(0) == c.decoder.grid_side * c.decoder.grid_side);
  CHECK(flat(dec.decode(mgfv).detail) == flat(out.detail));

  zero(dec.fold_output().weight());
  zero(dec.fold_output().bias());
  const DecodedClouds z = dec.decode(mgfv);
  const std::size_t g2 = c.decoder.grid_side * c.decoder.grid_side;
  for (std::size_t i = 0; i < z.detail.dim(0); ++i)
    for (int k = 0; k < 3; ++k)
      CHECK(z.detail.data()[i * 3 + k] == z.coarse.data()[(i / g2) * 3 + k]);
}

TEST_CASE("grid spans the folding extent") {
  const Config c = desk_config();
  ParamStore store;
  Rng rng(19);
  Decoder dec(store, c.decoder, c.encoder.mgfv_dim, rng);
  const Tensor g = dec.grid();
  CHECK(g.shape() == Shape{16, 2});
  CHECK(g.data()[0] == doctest::Approx(-0.05));
  CHECK(g.data()[31] == doctest::Approx(0.05));
}

TEST_CASE("decoder gradients match finite differences on a miniature") {
  const Config c = mini_config();
  for (int trial = 0; trial < 20; ++trial) {
    ParamStore store;
    Rng rng(200 + trial);
    Decoder dec(store, c.decoder, c.encoder.mgfv_dim, rng);
    randomize_biases(store, rng);
    Tensor mgfv = random_tensor({1, c.encoder.mgfv_dim}, rng);
    const Tensor target = random_cloud(9, rng, 0.5).to_tensor();
    std::vector<Tensor> leaves = params_of(store);
    leaves.push_back(mgfv);
    auto f = [&] {
      const DecodedClouds d = dec.decode(mgfv);
      return add(chamfer_loss(d.detail, target), chamfer_loss(d.coarse, target));
    };
    CHECK(gradcheck(f, leaves) < 1e-4);
  }
}

TEST_CASE("decoder errors") {
  const Config c = desk_config();
  ParamStore store;
  Rng rng(20);
  Decoder dec(store, c.decoder, c.encoder.mgfv_dim, rng);
  CHECK_THROWS_AS(dec.coarse_generate(Tensor::zeros({1, 3})), DimensionError);
  CHECK_THROWS_AS(dec.fold(Tensor::zeros({3, 3}), Tensor(), Tensor::zeros({1, 128})),
                  DimensionError);
  CHECK_THROWS_AS(dec.fold(Tensor::zeros({64, 3}), Tensor(), Tensor::zeros({1, 128})),
                  DimensionError);
}

TEST_CASE("one backward reaches at least 99% of encoder and decoder entries") {
  Config c = desk_config();
  c.gan.use_wgan = false;
  Model model(c);
  Rng rng(21);
  const Tensor pts = random_cloud(64, rng).to_tensor();
  const Tensor target = random_cloud(256, rng).to_tensor();
  model.params().zero_grad();
  const DecodedClouds out = model.forward(pts, false);
  backward(add(chamfer_loss(out.coarse, target), chamfer_loss(out.detail, target)));
  for (const char* prefix : {kEncoderPrefix, kDecoderPrefix}) {
    std::size_t total = 0, nonzero = 0;
    for (const auto& p : model.params().with_prefix(prefix)) {
      total += p.numel();
      if (!p.has_grad()) continue;
      for (double g : p.grad()) nonzero += g != 0.0;
    }
    CAPTURE(prefix);
    CHECK(static_cast<double>(nonzero) >= 0.99 * static_cast<double>(total));
  }
}

TEST_CASE("outputs stay finite for large finite features") {
  const Config c = desk_config();
  ParamStore store;
  Rng rng(22);
  Decoder dec(store, c.decoder, c.encoder.mgfv_dim, rng);
  NoGradGuard ng;
  const DecodedClouds d = dec.decode(random_tensor({1, c.encoder.mgfv_dim}, rng, -1e3, 1e3));
  for (double v : d.detail.data()) CHECK(std::isfinite(v));
}

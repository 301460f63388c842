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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// selected criterion fails.
//
//   acceptance [--only 1,2,...] [--skip 7] [--work DIR] [--config FILE]
//              [--data DIR]
//
// Criterion 7 trains two desk-scale models and takes a while; its tables and
// report CSV land in --work.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fewpoint/checkpoint.hpp"
#include "fewpoint/dataset.hpp"
#include "fewpoint/decoder.hpp"
#include "fewpoint/encoder.hpp"
#include "fewpoint/gan.hpp"
#include "fewpoint/metrics.hpp"
#include "fewpoint/model.hpp"
#include "fewpoint/ops.hpp"
#include "fewpoint/optim.hpp"
#include "fewpoint/pipeline.hpp"
#include "fewpoint/report.hpp"
#include "fewpoint/trainer.hpp"
#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "toy_gan.hpp"

#ifndef FEWPOINT_SOURCE_DIR
#define FEWPOINT_SOURCE_DIR "."
#endif

using namespace fewpoint;
using namespace fewpoint::testing;
namespace fs = std::filesystem;

namespace {

struct Settings {
  fs::path work = "acceptance_work";
  fs::path config = fs::path(FEWPOINT_SOURCE_DIR) / "configs" / "desk.cfg";
  fs::path data;  // empty: generate under work
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

PointCloud permuted(const PointCloud& c, Rng& rng) {
  std::vector<std::size_t> idx(c.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return c.select(idx);
}

PointCloud translated(PointCloud c, const Vec3& t) {
  for (auto& p : c.points())
    for (int k = 0; k < 3; ++k) p[k] += t[k];
  return c;
}

double brute_chamfer(const PointCloud& a, const PointCloud& b) {
  auto one_way = [](const PointCloud& x, const PointCloud& y) {
    double s = 0.0;
    for (const auto& p : x.points()) {
      double best = 1e300;
      for (const auto& q : y.points()) {
        const double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
        best = std::min(best, std::sqrt(dx * dx + dy * dy + dz * dz));
      }
      s += best;
    }
    return s / static_cast<double>(x.size());
  };
  return one_way(a, b) + one_way(b, a);
}

// Minimum mean matched distance over every permutation.
double brute_emd(const PointCloud& a, const PointCloud& b) {
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) s += distance(a[i], b[perm[i]]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(a.size());
}

bool is_bijection(const std::vector<std::size_t>& p) {
  std::set<std::size_t> seen(p.begin(), p.end());
  return seen.size() == p.size() && (p.empty() || *seen.rbegin() == p.size() - 1);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---- 1: gradients against central differences -----------------------------

Outcome gradient_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  const Config c = mini_config();
  std::map<std::string, double> worst;
  auto note = [&](const std::string& what, double err) {
    worst[what] = std::max(worst[what], err);
  };
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(1000 + trial);
    {
      Tensor a = random_tensor({8, 3}, rng), b = random_tensor({7, 3}, rng);
      note("cd", gradcheck([&] { return chamfer_loss(a, b); }, {a, b}));
    }
    {
      ParamStore store;
      Encoder enc(store, c.encoder, rng);
      randomize_biases(store, rng);
      const Tensor pts = random_cloud(6, rng).to_tensor(true);
      const Tensor w = random_tensor({1, c.encoder.mgfv_dim}, rng, -1, 1, false);
      std::vector<Tensor> leaves = store.with_prefix("");
      leaves.push_back(pts);
      note("encoder", gradcheck([&] { return sum(mul(enc.encode(pts), w)); }, leaves));

      const std::size_t pw = c.encoder.pooled_width();
      Tensor a = random_tensor({pw}, rng), b = random_tensor({pw}, rng);
      std::vector<Tensor> fl{a, b};
      for (const auto& p : store.with_prefix("encoder.fuse")) fl.push_back(p);
      note("fuse", gradcheck([&] { return sum(mul(enc.fuse(a, b), w)); }, fl));
    }
    {
      ParamStore store;
      Decoder dec(store, c.decoder, c.encoder.mgfv_dim, rng);
      randomize_biases(store, rng);
      Tensor mgfv = random_tensor({1, c.encoder.mgfv_dim}, rng);
      const Tensor target = random_cloud(9, rng, 0.5).to_tensor();
      std::vector<Tensor> leaves = store.with_prefix("");
      leaves.push_back(mgfv);
      note("decoder", gradcheck(
                          [&] {
                            const DecodedClouds d = dec.decode(mgfv);
                            return add(chamfer_loss(d.detail, target), chamfer_loss(d.coarse, target));
                          },
                          leaves));
    }
    {
      ParamStore store;
      Generator g(store, 4, 0.2, rng);
      Tensor x = random_tensor({4}, rng);
      const Tensor w = random_tensor({4}, rng, -1, 1, false);
      std::vector<Tensor> leaves = store.with_prefix("");
      leaves.push_back(x);
      note("generator", gradcheck([&] { return sum(mul(g.generate(x), w)); }, leaves));
    }
    {
      ParamStore store;
      Discriminator d(store, toy_gan_config(), kToyDim, rng);
      Tensor f = random_tensor({kToyDim}, rng);
      std::vector<Tensor> leaves = store.with_prefix("");
      leaves.push_back(f);
      note("discriminator", gradcheck([&] { return d.discriminate(f); }, leaves));

      // Penalty Hessian-vector path; the numeric side differences the
      // critic twice, no autodiff.
      const Tensor x = random_tensor({kToyDim}, rng, -1, 1, false);
      const std::vector<Tensor> params = store.with_prefix("");
      auto penalty = [&] {
        GradModeGuard on(true);
        const Tensor xin = Tensor::from_data(
            x.shape(), std::vector<double>(x.data().begin(), x.data().end()), true);
        const Tensor gx = grad(d.discriminate(xin), {xin}, true)[0];
        return square(add_scalar(l2_norm(gx), -1.0));
      };
      auto nested = [&] {
        Tensor probe = x.detach();
        auto v = probe.mutable_data();
        double sq = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
          const double keep = v[i];
          v[i] = keep + 1e-5;
          const double up = d.discriminate(probe).item();
          v[i] = keep - 1e-5;
          const double down = d.discriminate(probe).item();
          v[i] = keep;
          const double gi = (up - down) / 2e-5;
          sq += gi * gi;
        }
        const double n = std::sqrt(sq) - 1.0;
        return Tensor::scalar(n * n);
      };
      note("penalty(2nd order)",
           relative_error(analytic_grad(penalty, params), numeric_grad(nested, params, 1e-4)));
    }
    {
      // Fused path: encoder -> generator -> decoder -> CD.
      Config fc = c;
      fc.train.f32_storage = false;
      Model m(fc);
      randomize_biases(m.params(), rng);
      m.set_completed_stage(2);
      const Tensor pts = random_cloud(6, rng).to_tensor(true);
      const Tensor target = random_cloud(9, rng, 0.5).to_tensor();
      std::vector<Tensor> leaves;
      for (const char* p : {kEncoderPrefix, kGeneratorPrefix, kDecoderPrefix})
        for (const auto& t : m.group(p)) leaves.push_back(t);
      leaves.push_back(pts);
      note("encoder+generator+decoder", gradcheck(
                                            [&] {
                                              const DecodedClouds d = m.forward(pts, true);
                                              return add(chamfer_loss(d.detail, target),
                                                         chamfer_loss(d.coarse, target));
                                            },
                                            leaves));
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool ok = secs < 120.0;
  std::string detail;
  for (const auto& [what, err] : worst) {
    const double tol = what == "penalty(2nd order)" ? 1e-3 : 1e-4;
    ok &= err < tol;
    detail += what + "=" + fmt("%.2e", err) + " ";
  }
  detail += "(20 instances each, " + fmt("%.1f", secs) + "s)";
  return {ok, detail};
}

// ---- 2: EMD solvers ---------------------------------------------------------

Outcome emd_solvers() {
  Rng rng(2002);
  double worst_exact = 0.0, worst_ratio = 0.0;
  bool bijective = true;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(6);
    const PointCloud a = random_cloud(n, rng), b = random_cloud(n, rng);
    const Assignment e = emd_exact(a, b);
    bijective &= is_bijection(e.permutation);
    worst_exact = std::max(worst_exact, std::abs(e.cost - brute_emd(a, b)));
  }
  bool never_below = true;
  for (int trial = 0; trial < 100; ++trial) {
    const PointCloud a = random_cloud(32, rng), b = random_cloud(32, rng);
    const double exact = emd_exact(a, b).cost;
    const Assignment approx = emd_auction(a, b, 0.01);
    bijective &= is_bijection(approx.permutation);
    never_below &= approx.cost >= exact - 1e-12;
    worst_ratio = std::max(worst_ratio, approx.cost / exact);
  }
  const bool ok = worst_exact <= 1e-12 && worst_ratio <= 1.01 && bijective && never_below;
  return {ok, "exact vs brute max |diff|=" + fmt("%.1e", worst_exact) +
                  " (100, n<=6); auction/exact max=" + fmt("%.6f", worst_ratio) +
                  " (100, n=32, eps=0.01)"};
}

// ---- 3: metric properties ---------------------------------------------------

Outcome metric_properties() {
  Rng rng(3003);
  bool ok = true;
  double worst_brute = 0.0, worst_perm = 0.0, worst_shift = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const PointCloud a = random_cloud(1 + rng.below(40), rng);
    const PointCloud b = random_cloud(1 + rng.below(40), rng);
    const double ab = chamfer(a, b);
    ok &= ab == chamfer(b, a);
    ok &= ab >= 0.0;
    ok &= chamfer(a, a) == 0.0;
    worst_perm = std::max(worst_perm, std::abs(chamfer(permuted(a, rng), permuted(b, rng)) - ab));
    worst_brute = std::max(worst_brute, std::abs(ab - brute_chamfer(a, b)) / std::max(ab, 1e-300));
  }
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 4 + rng.below(29);
    const PointCloud a = random_cloud(n, rng), b = random_cloud(n, rng);
    const Vec3 t{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
    worst_shift = std::max(worst_shift, std::abs(emd_exact(translated(a, t), translated(b, t)).cost -
                                                 emd_exact(a, b).cost));
  }
  ok &= worst_perm <= 1e-12 && worst_brute <= 1e-12 && worst_shift <= 1e-9;
  return {ok, "CD symmetric, >= 0, CD(S,S)=0 on 100 pairs; perm drift=" + fmt("%.1e", worst_perm) +
                  ", vs brute=" + fmt("%.1e", worst_brute) +
                  "; EMD translation drift=" + fmt("%.1e", worst_shift) + " (50 pairs)"};
}

// ---- 4: encoder permutation invariance -------------------------------------

Outcome permutation_invariance() {
  const Config c = desk_config();
  ParamStore store;
  Rng rng(4004);
  Encoder enc(store, c.encoder, rng);
  NoGradGuard ng;
  std::string detail;
  bool ok = true;
  for (std::size_t n : {16, 128, 512}) {
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      const PointCloud p = random_cloud(n, rng);
      const Tensor ref = enc.encode(p.to_tensor());
      worst = std::max(worst, max_rel_diff(enc.encode(permuted(p, rng).to_tensor()), ref));
    }
    ok &= worst < 1e-5;
    detail += "n=" + std::to_string(n) + ": " + fmt("%.1e", worst) + " ";
  }
  return {ok, detail + "(50 permutations each, desk widths, both branches)"};
}

// ---- 5: WGAN-GP on the toy problem -----------------------------------------

Outcome wgan_gp() {
  const ToyCriticRun run = train_toy_critic(500, 11);
  Rng rng(5005);
  std::vector<double> wv(kToyDim);
  double n = 0.0;
  for (double& v : wv) {
    v = rng.normal();
    n += v * v;
  }
  for (double& v : wv) v /= std::sqrt(n);
  const Tensor w = Tensor::from_data({kToyDim}, wv);
  const Critic linear = [&w](const Tensor& x) { return sum(mul(w, x)); };
  double linear_pen = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const auto real = gaussian_batch(8, 1.0, 0.3, rng);
    const auto fake = gaussian_batch(8, -1.0, 0.3, rng);
    linear_pen = std::max(linear_pen, discriminator_loss(linear, real, fake, 10.0, trial).penalty);
  }
  const bool ok = run.after.gap > 0.0 && run.after.penalty < run.before.penalty &&
                  linear_pen <= 1e-12;
  return {ok, "after 500 steps gap=" + fmt("%.4f", run.after.gap) + ", penalty " +
                  fmt("%.4f", run.before.penalty) + " -> " + fmt("%.4f", run.after.penalty) +
                  "; unit-norm linear critic penalty=" + fmt("%.1e", linear_pen)};
}

// ---- 6: single-sample overfit ----------------------------------------------

Outcome overfit() {
  Config c = desk_config();
  c = variant_config(c, "pcn");
  c.train.stage1_epochs = 2000;
  c.train.batch_size = 1;
  c.train.lr = 1e-3;
  c.train.lr_decay = 1.0;
  const PointCloud gt = generate_shape("cuboid", 512, 606);
  PairConfig pc;
  pc.partial_points = 128;
  const SamplePair pair = make_pair(gt, 607, pc);
  const TrainingSet data{make_training_sample("overfit", "cuboid", gt, {pair.partial},
                                              c.decoder.coarse_n)};
  Model m(c);
  auto cd_now = [&] {
    return chamfer(PointCloud::from_tensor(m.complete(pair.partial).detail), gt);
  };
  const double before = cd_now();
  TrainState s;
  train_stage(m, s, 1, data);
  const double after = cd_now();
  const double cut = (before - after) / before;
  return {cut >= 0.9, "CD " + fmt("%.4f", before) + " -> " + fmt("%.4f", after) + " (" +
                          fmt("%.1f", 100.0 * cut) + "% reduction, 2000 steps)"};
}

// ---- 7: few-point completion on the desk dataset ---------------------------

Outcome few_point_benefit(const Settings& st) {
  fs::create_directories(st.work);
  fs::path data = st.data;
  if (data.empty()) {
    data = st.work / "data";
    if (!fs::exists(data / "manifest.tsv")) {
      DatasetConfig dc;
      dc.root = data;
      build_dataset(dc);
    }
  }
  const Config base = Config::from_file(st.config, desk_config());
  const DatasetManifest manifest = read_manifest(data);
  const TrainingSet train = load_split(manifest, "train", base.decoder.coarse_n);
  const TrainingSet test = load_split(manifest, "test", base.decoder.coarse_n);
  std::vector<std::string> classes;
  for (const auto& s : test)
    if (std::find(classes.begin(), classes.end(), s.class_label) == classes.end())
      classes.push_back(s.class_label);

  EvalOptions eo;
  eo.input_sizes = {128, 16};
  std::vector<VariantMetrics> results;
  for (const std::string variant : {"pcn", "full"}) {
    Model model(variant_config(base, variant));
    TrainState state;
    StageOptions so;
    so.on_epoch = [&](const EpochLog& e) {
      if (e.epoch % 10 == 0)
        std::fprintf(stderr, "[%s] stage %d epoch %zu loss %.5f\n", variant.c_str(), e.stage,
                     e.epoch, e.loss);
    };
    for (int stage = 1; stage <= 3; ++stage) train_stage(model, state, stage, train, so);
    save_checkpoint(model, state, st.work / (variant + "_stage3.ckpt"));
    results.push_back({variant, evaluate_model(model, test, eo)});
  }
  const MetricsReport report = build_report(results, "pcn", classes, eo.emd_epsilon);
  report.write((st.work / "few_point.csv").string());
  std::ofstream tables(st.work / "few_point.txt");
  for (std::size_t n : report.input_sizes()) {
    tables << format_reduction_table(report, n, "full vs pcn") << "\n"
           << format_means_table(report, n) << "\n";
  }

  std::size_t wins16 = 0, wins128 = 0;
  for (const auto& cls : classes) {
    wins16 += report.find("full", cls, 16)->cd_mean < report.find("pcn", cls, 16)->cd_mean;
    wins128 += report.find("full", cls, 128)->cd_mean < report.find("pcn", cls, 128)->cd_mean;
  }
  const ReportRow* avg16 = report.find("full", kAverageLabel, 16);
  const ReportRow* avg128 = report.find("full", kAverageLabel, 128);
  const std::string n_cls = std::to_string(classes.size());
  return {classes.size() == 8 && wins16 >= 6,
          "16-point inputs: full has lower CD on " + std::to_string(wins16) + "/" + n_cls +
              " classes (avg CD reduction " + fmt("%.2f", 100.0 * avg16->cd_reduction) +
              "%); 128-point: " + std::to_string(wins128) + "/" + n_cls + " (" +
              fmt("%.2f", 100.0 * avg128->cd_reduction) + "%); tables in " +
              (st.work / "few_point.txt").string()};
}

// ---- 8: schedule and sign conventions --------------------------------------

Outcome conventions() {
  TrainConfig t;
  t.lr = 1e-4;
  t.lr_decay = 0.7;
  t.lr_decay_every = 20;
  bool ok = true;
  double worst = 0.0;
  long double oracle = 1e-4L;
  for (std::size_t e = 0; e < 250; ++e) {
    if (e > 0 && e % 20 == 0) oracle *= 0.7L;
    const double got = lr_schedule(t, e);
    ok &= got == 1e-4 * std::pow(0.7, static_cast<double>(e / 20));
    worst = std::max(worst, static_cast<double>(std::fabs((got - oracle) / oracle)));
  }
  ok &= worst <= 1e-15;

  // Baseline CD 0.1, ours 0.10668: a 6.68% increase reads as -6.68%.
  const double rate = reduction_rate(0.1, 0.10668);
  ok &= std::abs(rate + 0.0668) < 1e-12;
  std::vector<VariantMetrics> vm{{"pcn", {}}, {"full", {}}};
  for (int i = 0; i < 2; ++i) {
    vm[0].samples.push_back({"s" + std::to_string(i), "sphere", 16, 0.1, 0.2});
    vm[1].samples.push_back({"s" + std::to_string(i), "sphere", 16, 0.10668, 0.18});
  }
  const MetricsReport r = build_report(vm, "pcn", {"sphere"});
  const std::string table = format_reduction_table(r, 16, "sign");
  const bool shown = table.find("-6.68%") != std::string::npos &&
                     table.find("10.00%") != std::string::npos;
  ok &= shown;
  return {ok, "lr schedule max rel dev=" + fmt("%.1e", worst) + " over e<250; rate(0.1,0.10668)=" +
                  fmt("%.4f", rate) + (shown ? ", table shows -6.68%" : ", table sign wrong")};
}

// ---- 9: end-to-end determinism ---------------------------------------------

Config tiny_pipeline_config() {
  Config c = desk_config();
  for (const auto& [k, v] : std::vector<std::pair<std::string, std::string>>{
           {"encoder.widths", "4,4,8,8,8"}, {"encoder.attention_dim", "4"},
           {"encoder.mgfv_dim", "8"}, {"decoder.coarse_n", "8"}, {"decoder.grid_side", "2"},
           {"decoder.coarse_hidden", "16"}, {"decoder.fold_hidden", "8"},
           {"decoder.local_hidden", "4"}, {"decoder.local_dim", "4"}, {"gan.token_count", "2"},
           {"gan.memory_units", "4"}, {"gan.disc_hidden", "8"}, {"train.epochs", "2"},
           {"train.batch_size", "4"}}) {
    c.set(k, v);
  }
  return c;
}

std::vector<std::string> pipeline_run(const fs::path& root, std::size_t threads) {
  DatasetConfig dc;
  dc.root = root / "data";
  dc.classes = 2;
  dc.train_per_class = 2;
  dc.val_per_class = 1;
  dc.test_per_class = 1;
  dc.gt_points = 64;
  dc.partial_points = 24;
  dc.seed = 9;
  build_dataset(dc);
  std::vector<fs::path> files;
  for (const std::string variant : {"pcn", "full"}) {
    std::optional<fs::path> prev;
    for (int stage = 1; stage <= 3; ++stage) {
      TrainRequest r;
      r.data = dc.root;
      r.stage = stage;
      if (!prev) r.config = variant_config(tiny_pipeline_config(), variant);
      r.resume = prev;
      r.out = root / (variant + "_stage" + std::to_string(stage) + ".ckpt");
      run_train(r);
      files.push_back(r.out);
      prev = r.out;
    }
  }
  EvalOptions eo;
  eo.threads = threads;
  const MetricsReport report =
      run_eval(root / "full_stage3.ckpt", root / "pcn_stage3.ckpt", dc.root, eo);
  report.write((root / "report.csv").string());
  files.push_back(root / "report.csv");
  std::vector<std::string> bytes;
  for (const auto& f : files) bytes.push_back(slurp(f));
  return bytes;
}

Outcome determinism() {
  TempDir a("accept_a"), b("accept_b");
  const auto ra = pipeline_run(a.path(), 1);
  const auto rb = pipeline_run(b.path(), 2);
  std::size_t same = 0;
  bool nonempty = true;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    same += ra[i] == rb[i];
    nonempty &= !ra[i].empty();
  }
  return {same == ra.size() && nonempty,
          std::to_string(same) + "/" + std::to_string(ra.size()) +
              " artifacts byte-identical (6 checkpoints, 1 report CSV; eval threads 1 vs 2)"};
}

// ---- 10: freezing ------------------------------------------------------------

Outcome freezing() {
  Config c = mini_config();
  c.train.f32_storage = true;
  c.train.epochs = 2;
  c.train.batch_size = 2;
  c.train.lr = 1e-3;
  TrainingSet data;
  PairConfig pc;
  pc.partial_points = 24;
  for (std::size_t i = 0; i < 4; ++i) {
    const std::string cls = shape_classes()[i];
    const PointCloud gt = generate_shape(cls, 64, 1000 + i);
    data.push_back(make_training_sample("s" + std::to_string(i), cls, gt,
                                        {make_pair(gt, 2000 + i, pc).partial},
                                        c.decoder.coarse_n));
  }
  Model m(c);
  TrainState s;
  const std::vector<std::string> groups{kEncoderPrefix, kDecoderPrefix, kGeneratorPrefix,
                                        kDiscriminatorPrefix};
  // Per (stage, optimizer): groups allowed to change during one update.
  const std::map<std::pair<int, std::string>, std::set<std::string>> allowed{
      {{1, kMainOptimizer}, {kEncoderPrefix, kDecoderPrefix}},
      {{2, kCriticOptimizer}, {kDiscriminatorPrefix}},
      {{2, kGeneratorOptimizer}, {kGeneratorPrefix}},
      {{3, kMainOptimizer}, {kEncoderPrefix, kDecoderPrefix, kGeneratorPrefix}},
  };
  std::map<std::pair<int, std::string>, std::set<std::string>> changed;
  std::map<std::string, std::uint64_t> before;
  std::size_t updates = 0, violations = 0;
  int stage = 0;
  StageOptions o;
  o.on_update = [&](const std::string& opt, bool after) {
    if (!after) {
      for (const auto& g : groups) before[g] = m.hash(g);
      return;
    }
    ++updates;
    const auto key = std::pair{stage, opt};
    const auto it = allowed.find(key);
    for (const auto& g : groups) {
      if (m.hash(g) == before[g]) continue;
      changed[key].insert(g);
      if (it == allowed.end() || !it->second.count(g)) ++violations;
    }
  };
  for (stage = 1; stage <= 3; ++stage) train_stage(m, s, stage, data, o);
  // Every allowed group must actually move, or the check proves nothing.
  bool all_moved = true;
  for (const auto& [key, set] : allowed) all_moved &= changed[key] == set;
  return {violations == 0 && all_moved && updates > 0,
          std::to_string(updates) + " updates hashed, " + std::to_string(violations) +
              " frozen-group changes" + (all_moved ? "" : ", some trainable group never moved")};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome(const Settings&)> run;
};

std::set<int> parse_ids(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.insert(std::stoi(tok));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  Settings st;
  std::set<int> only, skip;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    auto value = [&]() -> std::string {
      if (i + 1 >= argc) {
        std::fprintf(stderr, "acceptance: %s needs a value\n", a.c_str());
        std::exit(2);
      }
      return argv[++i];
    };
    if (a == "--only") {
      only = parse_ids(value());
    } else if (a == "--skip") {
      skip = parse_ids(value());
    } else if (a == "--work") {
      st.work = value();
    } else if (a == "--config") {
      st.config = value();
    } else if (a == "--data") {
      st.data = value();
    } else if (a == "--help" || a == "-h") {
      std::printf("usage: acceptance [--only 1,2,...] [--skip 7] [--work DIR] [--config FILE]"
                  " [--data DIR]\n");
      return 0;
    } else {
      std::fprintf(stderr, "acceptance: unknown argument %s\n", a.c_str());
      return 2;
    }
  }

  const std::vector<Criterion> criteria{
      {1, "gradient fidelity", [](const Settings&) { return gradient_fidelity(); }},
      {2, "EMD solvers", [](const Settings&) { return emd_solvers(); }},
      {3, "metric properties", [](const Settings&) { return metric_properties(); }},
      {4, "permutation invariance", [](const Settings&) { return permutation_invariance(); }},
      {5, "WGAN-GP toy", [](const Settings&) { return wgan_gp(); }},
      {6, "single-sample overfit", [](const Settings&) { return overfit(); }},
      {7, "few-point benefit", few_point_benefit},
      {8, "schedule and sign", [](const Settings&) { return conventions(); }},
      {9, "end-to-end determinism", [](const Settings&) { return determinism(); }},
      {10, "freezing", [](const Settings&) { return freezing(); }},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if ((!only.empty() && !only.count(c.id)) || skip.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome r;
    try {
      r = c.run(st);
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !r.pass;
    std::printf("%s %2d %s: %s [%.1fs]\n", r.pass ? "PASS" : "FAIL", c.id, c.name,
                r.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

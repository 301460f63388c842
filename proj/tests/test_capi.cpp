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

// Exercises the shared library through fewpoint.h only.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fewpoint/fewpoint.h"

namespace fs = std::filesystem;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  fp_string_free(s);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Scratch {
  fs::path path;
  explicit Scratch(const std::string& tag) {
    path = fs::temp_directory_path() / ("fewpoint_capi_" + tag + "_" +
                                        std::to_string(std::random_device{}()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

fp_config* tiny_config() {
  fp_config* c = nullptr;
  REQUIRE(fp_config_desk(&c) == FP_OK);
  const char* kv[][2] = {{"encoder.widths", "4,4,8,8,8"}, {"encoder.attention_dim", "4"},
                         {"encoder.mgfv_dim", "8"},       {"decoder.coarse_n", "8"},
                         {"decoder.grid_side", "2"},      {"decoder.coarse_hidden", "16"},
                         {"decoder.fold_hidden", "8"},    {"decoder.local_hidden", "4"},
                         {"decoder.local_dim", "4"},      {"gan.token_count", "2"},
                         {"gan.memory_units", "4"},       {"gan.disc_hidden", "8"},
                         {"train.epochs", "2"},           {"train.batch_size", "4"}};
  for (const auto& e : kv) REQUIRE(fp_config_set(c, e[0], e[1]) == FP_OK);
  REQUIRE(fp_config_validate(c) == FP_OK);
  return c;
}

}  // namespace

TEST_CASE("status names and null arguments") {
  CHECK(std::string(fp_status_name(FP_OK)) == "ok");
  CHECK(std::string(fp_status_name(FP_ERR_IO)) == "i/o error");
  CHECK(fp_config_desk(nullptr) == FP_ERR_NULL_ARGUMENT);
  CHECK(std::string(fp_last_error_message()).find("NULL") != std::string::npos);
  CHECK(fp_model_load(nullptr, nullptr) == FP_ERR_NULL_ARGUMENT);
  fp_config_free(nullptr);
  fp_cloud_free(nullptr);
  fp_model_free(nullptr);
  fp_report_free(nullptr);
  CHECK(std::string(fp_version()).size() > 0);
}

TEST_CASE("config handles") {
  fp_config* c = nullptr;
  REQUIRE(fp_config_desk(&c) == FP_OK);
  CHECK(fp_config_set(c, "train.lr", "0.002") == FP_OK);
  char* text = nullptr;
  REQUIRE(fp_config_to_text(c, &text) == FP_OK);
  CHECK(take(text).find("train.lr = 0.002") != std::string::npos);
  CHECK(fp_config_set(c, "train.nope", "1") == FP_ERR_PARSE);
  CHECK(std::string(fp_last_error_message()).find("train.nope") != std::string::npos);
  CHECK(fp_config_set(c, "train.lr", "fast") == FP_ERR_PARSE);
  CHECK(fp_config_validate(c) == FP_OK);
  CHECK(fp_config_set(c, "train.batch_size", "0") == FP_OK);
  CHECK(fp_config_validate(c) == FP_ERR_CONTRACT);
  CHECK(std::string(fp_last_error_message()).find("batch_size") != std::string::npos);
  fp_config_free(c);

  Scratch d("cfg");
  std::ofstream(d.path / "x.cfg") << "# comment\ntrain.epochs = 7\n";
  REQUIRE(fp_config_load((d.path / "x.cfg").c_str(), &c) == FP_OK);
  REQUIRE(fp_config_to_text(c, &text) == FP_OK);
  const std::string t = take(text);
  CHECK(t.find("train.epochs = 7") != std::string::npos);
  CHECK(t.find("encoder.mgfv_dim = 128") != std::string::npos);  // desk base
  fp_config_free(c);
  CHECK(fp_config_load((d.path / "missing.cfg").c_str(), &c) == FP_ERR_IO);
}

TEST_CASE("cloud handles") {
  const std::vector<double> xyz{0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 3};
  fp_cloud* c = nullptr;
  REQUIRE(fp_cloud_create(xyz.data(), 4, &c) == FP_OK);
  CHECK(fp_cloud_size(c) == 4);
  CHECK(std::vector<double>(fp_cloud_data(c), fp_cloud_data(c) + 12) == xyz);
  fp_cloud* s = nullptr;
  REQUIRE(fp_cloud_subsample(c, 2, 5, &s) == FP_OK);
  CHECK(fp_cloud_size(s) == 2);
  fp_cloud_free(s);
  REQUIRE(fp_cloud_subsample(c, 10, 5, &s) == FP_OK);
  CHECK(fp_cloud_size(s) == 4);
  fp_cloud_free(s);

  Scratch d("cloud");
  const std::string path = (d.path / "c.xyz").string();
  REQUIRE(fp_cloud_write_xyz(c, path.c_str()) == FP_OK);
  REQUIRE(fp_cloud_read_xyz(path.c_str(), &s) == FP_OK);
  CHECK(std::vector<double>(fp_cloud_data(s), fp_cloud_data(s) + 12) == xyz);
  fp_cloud_free(s);
  fp_cloud_free(c);
  CHECK(fp_cloud_read_xyz((d.path / "none.xyz").c_str(), &s) == FP_ERR_IO);
  std::ofstream(d.path / "bad.xyz") << "1 2\n";
  CHECK(fp_cloud_read_xyz((d.path / "bad.xyz").c_str(), &s) == FP_ERR_PARSE);
}

TEST_CASE("dataset, training, completion and evaluation end to end") {
  Scratch d("e2e");
  const std::string data = (d.path / "data").string();
  fp_dataset_options ds;
  fp_dataset_options_default(&ds);
  CHECK(ds.classes == 8);
  CHECK(ds.train_per_class == 25);
  ds.classes = 2;
  ds.train_per_class = 2;
  ds.test_per_class = 1;
  ds.gt_points = 64;
  ds.partial_points = 24;
  char* manifest = nullptr;
  REQUIRE(fp_generate_dataset(data.c_str(), &ds, &manifest) == FP_OK);
  CHECK(fs::exists(take(manifest)));

  fp_config* cfg = tiny_config();
  const std::string s1 = (d.path / "s1.ckpt").string(), s2 = (d.path / "s2.ckpt").string(),
                    s3 = (d.path / "s3.ckpt").string(), log = (d.path / "log.csv").string();
  std::size_t epochs_seen = 0;
  fp_train_request r{};
  r.data = data.c_str();
  r.stage = 3;
  r.config = cfg;
  r.out = s3.c_str();
  int done = -1;
  CHECK(fp_train(&r, &done) == FP_ERR_CONTRACT);
  CHECK(std::string(fp_last_error_message()).find("stage") != std::string::npos);

  r.stage = 1;
  r.out = s1.c_str();
  r.log_csv = log.c_str();
  r.user = &epochs_seen;
  r.on_epoch = [](void* user, const char*, int, size_t, double loss, double, double) {
    CHECK(std::isfinite(loss));
    ++*static_cast<std::size_t*>(user);
  };
  REQUIRE(fp_train(&r, &done) == FP_OK);
  CHECK(done == 1);
  CHECK(epochs_seen == 2);
  CHECK(slurp(log).rfind("epoch,stage,loss,lr,seconds\n", 0) == 0);
  r.config = nullptr;
  r.log_csv = nullptr;
  r.on_epoch = nullptr;
  for (int stage : {2, 3}) {
    r.stage = stage;
    r.resume = stage == 2 ? s1.c_str() : s2.c_str();
    r.out = stage == 2 ? s2.c_str() : s3.c_str();
    REQUIRE(fp_train(&r, &done) == FP_OK);
    CHECK(done == stage);
  }

  fp_config* stored = nullptr;
  REQUIRE(fp_config_from_checkpoint(s3.c_str(), &stored) == FP_OK);
  std::ofstream(d.path / "over.cfg") << "train.lr = 0.003\n";
  REQUIRE(fp_config_apply_file(stored, (d.path / "over.cfg").c_str()) == FP_OK);
  char* stored_text = nullptr;
  REQUIRE(fp_config_to_text(stored, &stored_text) == FP_OK);
  const std::string st = take(stored_text);
  CHECK(st.find("encoder.mgfv_dim = 8") != std::string::npos);
  CHECK(st.find("train.batch_size = 4") != std::string::npos);
  CHECK(st.find("train.lr = 0.003") != std::string::npos);
  CHECK(fp_config_apply_file(stored, (d.path / "missing.cfg").c_str()) == FP_ERR_IO);
  fp_config_free(stored);
  CHECK(fp_config_from_checkpoint((d.path / "missing.ckpt").c_str(), &stored) == FP_ERR_IO);

  fp_model* m = nullptr;
  REQUIRE(fp_model_load(s3.c_str(), &m) == FP_OK);
  CHECK(fp_model_completed_stage(m) == 3);
  CHECK(fp_model_detail_points(m) == 32);
  char* variant = nullptr;
  REQUIRE(fp_model_variant(m, &variant) == FP_OK);
  CHECK(take(variant) == "full");

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (std::size_t n : {16u, 2048u}) {
    std::vector<double> xyz(3 * n);
    for (double& v : xyz) v = u(rng);
    fp_cloud* in = nullptr;
    REQUIRE(fp_cloud_create(xyz.data(), n, &in) == FP_OK);
    fp_cloud *a = nullptr, *b = nullptr;
    REQUIRE(fp_model_complete(m, in, 0, &a) == FP_OK);
    REQUIRE(fp_model_complete(m, in, 0, &b) == FP_OK);
    CHECK(fp_cloud_size(a) == 32);
    const std::vector<double> va(fp_cloud_data(a), fp_cloud_data(a) + 96);
    CHECK(va == std::vector<double>(fp_cloud_data(b), fp_cloud_data(b) + 96));
    for (double v : va) CHECK(std::isfinite(v));
    fp_cloud_free(b);

    // With normalisation the output follows a translated input.
    std::vector<double> moved = xyz;
    for (std::size_t i = 0; i < moved.size(); ++i) moved[i] += i % 3 == 0 ? 5.0 : -1.0;
    fp_cloud* in2 = nullptr;
    REQUIRE(fp_cloud_create(moved.data(), n, &in2) == FP_OK);
    fp_cloud *na = nullptr, *nb = nullptr;
    REQUIRE(fp_model_complete(m, in, 1, &na) == FP_OK);
    REQUIRE(fp_model_complete(m, in2, 1, &nb) == FP_OK);
    for (std::size_t i = 0; i < 96; ++i) {
      const double shift = i % 3 == 0 ? 5.0 : -1.0;
      CHECK(std::abs(fp_cloud_data(nb)[i] - fp_cloud_data(na)[i] - shift) < 1e-9);
    }
    fp_cloud_free(na);
    fp_cloud_free(nb);
    fp_cloud_free(in2);
    fp_cloud_free(a);
    fp_cloud_free(in);
  }
  fp_cloud* empty = nullptr;
  REQUIRE(fp_cloud_create(nullptr, 0, &empty) == FP_OK);
  fp_cloud* out = nullptr;
  CHECK(fp_model_complete(m, empty, 0, &out) == FP_ERR_DEGENERATE_INPUT);
  fp_cloud_free(empty);
  fp_model_free(m);

  fp_eval_options eo;
  fp_eval_options_default(&eo);
  const std::size_t sizes[] = {16};
  eo.input_sizes = sizes;
  eo.n_input_sizes = 1;
  fp_report* rep = nullptr;
  REQUIRE(fp_eval(s3.c_str(), s3.c_str(), data.c_str(), &eo, &rep) == FP_OK);
  char* csv = nullptr;
  REQUIRE(fp_report_to_csv(rep, &csv) == FP_OK);
  const std::string text = take(csv);
  CHECK(text.find("variant,class,input_size,cd_mean,emd_mean,cd_reduction,emd_reduction,"
                  "n_samples") != std::string::npos);
  CHECK(text.find("baseline:full") != std::string::npos);
  const std::string path = (d.path / "r.csv").string();
  REQUIRE(fp_report_write(rep, path.c_str()) == FP_OK);
  fp_report_free(rep);
  REQUIRE(fp_report_read(path.c_str(), &rep) == FP_OK);
  REQUIRE(fp_report_to_csv(rep, &csv) == FP_OK);
  CHECK(take(csv) == text);
  char* tables = nullptr;
  REQUIRE(fp_report_tables(rep, &tables) == FP_OK);
  CHECK(take(tables).find("Average") != std::string::npos);
  fp_report_free(rep);
  CHECK(fp_eval(s3.c_str(), (d.path / "nope.ckpt").c_str(), data.c_str(), &eo, &rep) ==
        FP_ERR_IO);
  fp_config_free(cfg);
}

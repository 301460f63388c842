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

// fewpoint command-line front end. Talks to the library only through the C
// interface in fewpoint.h.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fewpoint/fewpoint.h"

namespace {

// Thrown to unwind with a status and the library's message.
struct CliFailure {
  fp_status status;
  std::string message;
};

void check(fp_status s, const std::string& what) {
  if (s != FP_OK) throw CliFailure{s, what + ": " + fp_last_error_message()};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using ConfigPtr = std::unique_ptr<fp_config, Deleter<fp_config, fp_config_free>>;
using CloudPtr = std::unique_ptr<fp_cloud, Deleter<fp_cloud, fp_cloud_free>>;
using ModelPtr = std::unique_ptr<fp_model, Deleter<fp_model, fp_model_free>>;
using ReportPtr = std::unique_ptr<fp_report, Deleter<fp_report, fp_report_free>>;

std::string take(char* s) {
  std::string out = s ? s : "";
  fp_string_free(s);
  return out;
}

// Base configuration (the resumed checkpoint's, else the desk defaults),
// then --config FILE, then --set overrides.
ConfigPtr make_config(const std::string& file, const std::vector<std::string>& sets,
                      const std::string& resume = "") {
  fp_config* raw = nullptr;
  if (resume.empty()) {
    check(fp_config_desk(&raw), "config");
  } else {
    check(fp_config_from_checkpoint(resume.c_str(), &raw), "config");
  }
  ConfigPtr c(raw);
  if (!file.empty()) check(fp_config_apply_file(c.get(), file.c_str()), "config");
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw CliFailure{FP_ERR_PARSE, "--set expects key=value, got '" + kv + "'"};
    }
    check(fp_config_set(c.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()),
          "--set " + kv);
  }
  return c;
}

void print_epoch(void*, const char* variant, int stage, size_t epoch, double loss, double lr,
                 double seconds) {
  if (variant && *variant) std::fprintf(stderr, "[%s] ", variant);
  std::fprintf(stderr, "stage %d epoch %zu loss %.6g lr %.3g (%.2fs)\n", stage, epoch, loss, lr,
               seconds);
}

struct EvalFlags {
  std::vector<std::size_t> sizes{128, 16};
  std::uint64_t seed = 1;
  double emd_epsilon = 0.01;
  std::size_t threads = 0;

  void add(CLI::App* app) {
    app->add_option("--input-sizes", sizes, "Input sizes to evaluate at")->delimiter(',');
    app->add_option("--eval-seed", seed, "Seed for test-input subsampling");
    app->add_option("--emd-epsilon", emd_epsilon, "Auction epsilon for the EMD column");
    app->add_option("--threads", threads, "Evaluation threads (0 reads FEWPOINT_THREADS)");
  }
  fp_eval_options options() const {
    fp_eval_options o;
    fp_eval_options_default(&o);
    o.input_sizes = sizes.data();
    o.n_input_sizes = sizes.size();
    o.seed = seed;
    o.emd_epsilon = emd_epsilon;
    o.threads = threads;
    return o;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-point cloud completion: data generation, training, evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fp_version());

  // gen-data
  fp_dataset_options ds;
  fp_dataset_options_default(&ds);
  std::string ds_out;
  auto* gen = app.add_subcommand("gen-data", "Write the synthetic dataset and its manifest");
  gen->add_option("--out", ds_out, "Output directory")->required();
  gen->add_option("--classes", ds.classes, "Number of shape classes (1-8)")->capture_default_str();
  gen->add_option("--per-class", ds.train_per_class, "Training samples per class")
      ->capture_default_str();
  gen->add_option("--val-per-class", ds.val_per_class)->capture_default_str();
  gen->add_option("--test-per-class", ds.test_per_class)->capture_default_str();
  gen->add_option("--gt-points", ds.gt_points)->capture_default_str();
  gen->add_option("--partial-points", ds.partial_points)->capture_default_str();
  gen->add_option("--seed", ds.seed)->capture_default_str();

  // train
  std::string tr_data, tr_config, tr_resume, tr_out, tr_log;
  std::vector<std::string> tr_set;
  int tr_stage = 1;
  std::size_t tr_max = 0;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "Run or resume one training stage");
  train->add_option("--data", tr_data, "Dataset directory")->required();
  train->add_option("--stage", tr_stage, "Stage to run")->required()->check(CLI::Range(1, 3));
  train->add_option("--config", tr_config, "Config file (key = value lines)");
  train->add_option("--set", tr_set, "Config override key=value (repeatable)");
  train->add_option("--resume", tr_resume, "Checkpoint to continue from");
  train->add_option("--out", tr_out, "Checkpoint to write")->required();
  train->add_option("--log", tr_log, "Per-epoch CSV log");
  train->add_option("--max-epochs", tr_max, "Stop after this many epochs (resumable)");
  train->add_flag("--quiet", quiet, "No per-epoch progress on stderr");

  // complete
  std::string cp_ckpt, cp_in, cp_out;
  std::optional<std::size_t> cp_points;
  std::uint64_t cp_seed = 1;
  bool cp_normalize = false;
  auto* complete = app.add_subcommand("complete", "Complete one partial cloud");
  complete->add_option("--ckpt", cp_ckpt, "Trained checkpoint")->required();
  complete->add_option("--in", cp_in, "Partial cloud (.xyz)")->required();
  complete->add_option("--out", cp_out, "Completed cloud (.xyz)")->required();
  complete->add_option("--points", cp_points, "Randomly keep K input points first");
  complete->add_option("--seed", cp_seed, "Seed for --points")->capture_default_str();
  complete->add_flag("--normalize", cp_normalize,
                     "Centre and scale the input to the unit ball, map the output back");

  // eval
  std::string ev_ckpt, ev_base, ev_data, ev_out;
  EvalFlags ev_flags;
  auto* eval = app.add_subcommand("eval", "Compare a model against a baseline on the test split");
  eval->add_option("--ckpt", ev_ckpt, "Model checkpoint")->required();
  eval->add_option("--baseline-ckpt", ev_base, "Baseline checkpoint")->required();
  eval->add_option("--data", ev_data, "Dataset directory")->required();
  eval->add_option("--out", ev_out, "Report CSV")->required();
  ev_flags.add(eval);

  // ablate
  std::string ab_data, ab_config, ab_out;
  std::vector<std::string> ab_set;
  EvalFlags ab_flags;
  auto* ablate = app.add_subcommand("ablate", "Train and compare the five ablation variants");
  ablate->add_option("--data", ab_data, "Dataset directory")->required();
  ablate->add_option("--config", ab_config, "Config file (key = value lines)");
  ablate->add_option("--set", ab_set, "Config override key=value (repeatable)");
  ablate->add_option("--out", ab_out, "Output directory")->required();
  ablate->add_flag("--quiet", quiet, "No per-epoch progress on stderr");
  ab_flags.add(ablate);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      char* manifest = nullptr;
      check(fp_generate_dataset(ds_out.c_str(), &ds, &manifest), "gen-data");
      std::cout << take(manifest) << "\n";
    } else if (*train) {
      ConfigPtr config = make_config(tr_config, tr_set, tr_resume);
      fp_train_request r{};
      r.data = tr_data.c_str();
      r.stage = tr_stage;
      r.config = config.get();
      r.resume = tr_resume.empty() ? nullptr : tr_resume.c_str();
      r.out = tr_out.c_str();
      r.log_csv = tr_log.empty() ? nullptr : tr_log.c_str();
      r.max_epochs = tr_max;
      r.on_epoch = quiet ? nullptr : print_epoch;
      int done = 0;
      check(fp_train(&r, &done), "train");
      std::cout << tr_out << " (completed stage " << done << ")\n";
    } else if (*complete) {
      fp_model* m = nullptr;
      check(fp_model_load(cp_ckpt.c_str(), &m), "complete");
      ModelPtr model(m);
      fp_cloud* c = nullptr;
      check(fp_cloud_read_xyz(cp_in.c_str(), &c), "complete");
      CloudPtr input(c);
      if (cp_points) {
        if (*cp_points == 0) throw CliFailure{FP_ERR_CONTRACT, "--points must be positive"};
        check(fp_cloud_subsample(input.get(), *cp_points, cp_seed, &c), "complete");
        input.reset(c);
      }
      check(fp_model_complete(model.get(), input.get(), cp_normalize ? 1 : 0, &c), "complete");
      CloudPtr out(c);
      check(fp_cloud_write_xyz(out.get(), cp_out.c_str()), "complete");
      std::cout << cp_out << " (" << fp_cloud_size(out.get()) << " points)\n";
    } else if (*eval) {
      const fp_eval_options o = ev_flags.options();
      fp_report* r = nullptr;
      check(fp_eval(ev_ckpt.c_str(), ev_base.c_str(), ev_data.c_str(), &o, &r), "eval");
      ReportPtr report(r);
      check(fp_report_write(report.get(), ev_out.c_str()), "eval");
      char* tables = nullptr;
      check(fp_report_tables(report.get(), &tables), "eval");
      std::cout << take(tables);
    } else if (*ablate) {
      ConfigPtr config = make_config(ab_config, ab_set);
      const fp_eval_options o = ab_flags.options();
      fp_report* r = nullptr;
      check(fp_ablate(ab_data.c_str(), config.get(), ab_out.c_str(), &o,
                      quiet ? nullptr : print_epoch, nullptr, &r),
            "ablate");
      ReportPtr report(r);
      char* tables = nullptr;
      check(fp_report_tables(report.get(), &tables), "ablate");
      std::cout << take(tables);
    }
  } catch (const CliFailure& f) {
    std::cerr << "fewpoint: " << f.message << "\n";
    return 1;
  }
  return 0;
}

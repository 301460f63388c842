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

#ifndef FEWPOINT_REPORT_HPP_
#define FEWPOINT_REPORT_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fewpoint/model.hpp"
#include "fewpoint/trainer.hpp"

namespace fewpoint {

inline constexpr const char* kAverageLabel = "Average";
inline constexpr const char* kReportHeader =
    "variant,class,input_size,cd_mean,emd_mean,cd_reduction,emd_reduction,n_samples";

struct EvalOptions {
  std::vector<std::size_t> input_sizes{128, 16};
  std::uint64_t seed = 1;
  double emd_epsilon = 0.01;
  // 0 reads FEWPOINT_THREADS (default 1).
  std::size_t threads = 0;
};

// Worker count from FEWPOINT_THREADS; 1 when unset. Malformed values throw.
std::size_t threads_from_env();

struct SampleMetrics {
  std::string sample_id;
  std::string class_label;
  std::size_t input_size = 0;
  double cd = 0.0;
  double emd = 0.0;
};

// The input cloud for one test sample at one input size: view 0, randomly
// subsampled (seeded by sample id and size) when larger than `input_size`.
PointCloud eval_input(const TrainingSample& sample, std::size_t input_size,
                      std::uint64_t seed);

// Unsquared CD of the detail cloud against the gt, and auction EMD after
// farthest-point downsampling the larger cloud to the smaller one's size.
// Results are ordered by input size, then by position in `test`.
std::vector<SampleMetrics> evaluate_model(const Model& model, const TrainingSet& test,
                                          const EvalOptions& options);

struct ReportRow {
  std::string variant;
  std::string class_label;
  std::size_t input_size = 0;
  double cd_mean = 0.0;
  double emd_mean = 0.0;
  double cd_reduction = 0.0;
  double emd_reduction = 0.0;
  std::size_t n_samples = 0;
};

struct MetricsReport {
  std::string baseline;
  std::string emd_label;
  std::vector<ReportRow> rows;

  std::vector<std::string> variants() const;  // first-appearance order
  std::vector<std::string> classes() const;   // excluding the Average label
  std::vector<std::size_t> input_sizes() const;
  const ReportRow* find(const std::string& variant, const std::string& class_label,
                        std::size_t input_size) const;

  // Recomputes every rate from the stored means (and every Average row from
  // its class rows) and throws ContractError on a deviation beyond tol.
  void verify(double tol = 1e-12) const;

  // One '#' comment line, the header, then one row per entry.
  std::string to_csv() const;
  static MetricsReport from_csv(const std::string& text, const std::string& source = "<csv>");
  static MetricsReport read(const std::string& path);
  void write(const std::string& path) const;
};

struct VariantMetrics {
  std::string variant;
  std::vector<SampleMetrics> samples;
};

// Per (variant, input size, class) means and rates against `baseline`, plus
// an Average row per (variant, input size): mean of class means, mean of
// class rates, summed sample counts. Every variant must cover `classes`.
MetricsReport build_report(const std::vector<VariantMetrics>& variants,
                           const std::string& baseline,
                           const std::vector<std::string>& classes,
                           double emd_epsilon = 0.01);

// Reduction-rate table for one input size: classes as columns, Average
// last, a CD and an EMD row (in percent) per non-baseline variant.
std::string format_reduction_table(const MetricsReport& report, std::size_t input_size,
                                   const std::string& title);
// The raw means behind the rates, same layout, every variant included.
std::string format_means_table(const MetricsReport& report, std::size_t input_size);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace fewpoint

#endif  // FEWPOINT_REPORT_HPP_

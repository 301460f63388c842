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

#include "fewpoint/report.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "fewpoint/errors.hpp"
#include "fewpoint/metrics.hpp"
#include "fewpoint/random.hpp"

namespace fewpoint {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ParseError(where + ": bad number '" + s + "'");
  return v;
}

std::size_t parse_size(const std::string& s, const std::string& where) {
  std::size_t v = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) {
    throw ParseError(where + ": bad count '" + s + "'");
  }
  return v;
}

std::string emd_label(double epsilon) { return "auction(eps=" + format_double(epsilon) + ")"; }

bool close(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw ContractError("format_double: conversion failed");
  return std::string(buf, ptr);
}

std::size_t threads_from_env() {
  const char* raw = std::getenv("FEWPOINT_THREADS");
  if (!raw || !*raw) return 1;
  const std::string s(raw);
  const std::size_t n = parse_size(s, "FEWPOINT_THREADS");
  if (n == 0) throw ContractError("FEWPOINT_THREADS must be at least 1");
  return n;
}

PointCloud eval_input(const TrainingSample& sample, std::size_t input_size, std::uint64_t seed) {
  if (sample.view_clouds.empty()) {
    throw ContractError("eval: sample " + sample.sample_id + " has no partial view");
  }
  if (input_size == 0) throw ContractError("eval: input size must be positive");
  const PointCloud& view = sample.view_clouds[0];
  if (view.size() <= input_size) return view;
  const std::uint64_t s =
      derive_seed(seed, "eval:" + sample.sample_id + ":" + std::to_string(input_size));
  return random_subsample(view, input_size, s);
}

std::vector<SampleMetrics> evaluate_model(const Model& model, const TrainingSet& test,
                                          const EvalOptions& options) {
  if (test.empty()) throw ContractError("eval: empty test split");
  if (options.input_sizes.empty()) throw ContractError("eval: no input sizes");
  struct Task {
    std::size_t sample, size;
  };
  std::vector<Task> tasks;
  for (std::size_t s : options.input_sizes)
    for (std::size_t i = 0; i < test.size(); ++i) tasks.push_back({i, s});

  std::vector<SampleMetrics> out(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  auto run = [&](std::size_t t) {
    const TrainingSample& sample = test[tasks[t].sample];
    const PointCloud input = eval_input(sample, tasks[t].size, options.seed);
    const PointCloud detail = PointCloud::from_tensor(model.complete(input).detail);
    const PointCloud& gt = sample.gt_cloud;
    SampleMetrics m;
    m.sample_id = sample.sample_id;
    m.class_label = sample.class_label;
    m.input_size = tasks[t].size;
    m.cd = chamfer(detail, gt);
    const bool detail_larger = detail.size() > gt.size();
    const PointCloud& big = detail_larger ? detail : gt;
    const PointCloud& small = detail_larger ? gt : detail;
    const PointCloud down = big.select(farthest_point_sample(big, small.size(), 0));
    m.emd = emd_auction(down, small, options.emd_epsilon).cost;
    out[t] = std::move(m);
  };

  const std::size_t threads =
      std::max<std::size_t>(1, std::min(options.threads ? options.threads : threads_from_env(),
                                        tasks.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    NoGradGuard no_grad;  // grad mode is per thread
    for (std::size_t t; (t = next.fetch_add(1)) < tasks.size();) {
      try {
        run(t);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::vector<std::string> MetricsReport::variants() const {
  std::vector<std::string> out;
  for (const auto& r : rows)
    if (std::find(out.begin(), out.end(), r.variant) == out.end()) out.push_back(r.variant);
  return out;
}

std::vector<std::string> MetricsReport::classes() const {
  std::vector<std::string> out;
  for (const auto& r : rows) {
    if (r.class_label == kAverageLabel) continue;
    if (std::find(out.begin(), out.end(), r.class_label) == out.end()) {
      out.push_back(r.class_label);
    }
  }
  return out;
}

std::vector<std::size_t> MetricsReport::input_sizes() const {
  std::vector<std::size_t> out;
  for (const auto& r : rows)
    if (std::find(out.begin(), out.end(), r.input_size) == out.end()) {
      out.push_back(r.input_size);
    }
  return out;
}

const ReportRow* MetricsReport::find(const std::string& variant, const std::string& class_label,
                                     std::size_t input_size) const {
  for (const auto& r : rows)
    if (r.variant == variant && r.class_label == class_label && r.input_size == input_size) {
      return &r;
    }
  return nullptr;
}

void MetricsReport::verify(double tol) const {
  const auto cls = classes();
  for (const auto& r : rows) {
    const std::string where = r.variant + "/" + r.class_label + "/" + std::to_string(r.input_size);
    const ReportRow* base = find(baseline, r.class_label, r.input_size);
    if (!base) throw ContractError("report: no baseline row for " + where);
    if (r.class_label != kAverageLabel) {
      if (!close(r.cd_reduction, reduction_rate(base->cd_mean, r.cd_mean), tol) ||
          !close(r.emd_reduction, reduction_rate(base->emd_mean, r.emd_mean), tol)) {
        throw ContractError("report: reduction rate of " + where +
                            " disagrees with its stored means");
      }
      continue;
    }
    double cd = 0, emd = 0, cd_rate = 0, emd_rate = 0;
    std::size_t n = 0;
    for (const auto& c : cls) {
      const ReportRow* row = find(r.variant, c, r.input_size);
      if (!row) throw ContractError("report: " + where + " lacks class " + c);
      cd += row->cd_mean;
      emd += row->emd_mean;
      cd_rate += row->cd_reduction;
      emd_rate += row->emd_reduction;
      n += row->n_samples;
    }
    const double k = static_cast<double>(cls.size());
    if (!close(r.cd_mean, cd / k, tol) || !close(r.emd_mean, emd / k, tol) ||
        !close(r.cd_reduction, cd_rate / k, tol) || !close(r.emd_reduction, emd_rate / k, tol) ||
        r.n_samples != n) {
      throw ContractError("report: " + where + " disagrees with its class rows");
    }
  }
}

std::string MetricsReport::to_csv() const {
  std::ostringstream out;
  out << "# baseline=" << baseline << " cd=chamfer-l2 emd=" << emd_label << "\n";
  out << kReportHeader << "\n";
  for (const auto& r : rows) {
    out << r.variant << ',' << r.class_label << ',' << r.input_size << ','
        << format_double(r.cd_mean) << ',' << format_double(r.emd_mean) << ','
        << format_double(r.cd_reduction) << ',' << format_double(r.emd_reduction) << ','
        << r.n_samples << "\n";
  }
  return out.str();
}

MetricsReport MetricsReport::from_csv(const std::string& text, const std::string& source) {
  MetricsReport report;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string where = source + ":" + std::to_string(lineno);
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream words(line.substr(1));
      std::string w;
      while (words >> w) {
        const auto eq = w.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = w.substr(0, eq), value = w.substr(eq + 1);
        if (key == "baseline") report.baseline = value;
        if (key == "emd") report.emd_label = value;
      }
      continue;
    }
    if (!header) {
      if (line != kReportHeader) throw ParseError(where + ": unexpected header '" + line + "'");
      header = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 8) {
      throw ParseError(where + ": expected 8 fields, got " + std::to_string(f.size()));
    }
    ReportRow r;
    r.variant = f[0];
    r.class_label = f[1];
    r.input_size = parse_size(f[2], where);
    r.cd_mean = parse_double(f[3], where);
    r.emd_mean = parse_double(f[4], where);
    r.cd_reduction = parse_double(f[5], where);
    r.emd_reduction = parse_double(f[6], where);
    r.n_samples = parse_size(f[7], where);
    report.rows.push_back(std::move(r));
  }
  if (!header) throw ParseError(source + ": missing header");
  if (report.baseline.empty()) throw ParseError(source + ": missing baseline= comment");
  report.verify();
  return report;
}

MetricsReport MetricsReport::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open report " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_csv(buf.str(), path);
}

void MetricsReport::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report " + path);
  out << to_csv();
  if (!out) throw IoError("write failed for " + path);
}

MetricsReport build_report(const std::vector<VariantMetrics>& variants,
                           const std::string& baseline, const std::vector<std::string>& classes,
                           double emd_epsilon) {
  if (classes.empty()) throw ContractError("report: no classes");
  const VariantMetrics* base = nullptr;
  for (const auto& v : variants)
    if (v.variant == baseline) base = &v;
  if (!base) throw ContractError("report: baseline variant '" + baseline + "' missing");

  struct Acc {
    double cd = 0, emd = 0;
    std::size_t n = 0;
  };
  using Key = std::pair<std::size_t, std::string>;  // (input size, class)
  auto accumulate = [&](const VariantMetrics& v) {
    std::map<Key, Acc> acc;
    for (const auto& s : v.samples) {
      Acc& a = acc[{s.input_size, s.class_label}];
      a.cd += s.cd;
      a.emd += s.emd;
      ++a.n;
    }
    return acc;
  };
  std::vector<std::size_t> sizes;
  for (const auto& s : base->samples)
    if (std::find(sizes.begin(), sizes.end(), s.input_size) == sizes.end()) {
      sizes.push_back(s.input_size);
    }

  std::vector<std::map<Key, Acc>> accs;
  for (const auto& v : variants) {
    auto acc = accumulate(v);
    std::vector<std::string> missing;
    for (std::size_t size : sizes)
      for (const auto& c : classes)
        if (!acc.count({size, c}) &&
            std::find(missing.begin(), missing.end(), c) == missing.end()) {
          missing.push_back(c);
        }
    if (!missing.empty()) {
      std::string names;
      for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
      throw ContractError("report: variant '" + v.variant + "' has no results for class(es) " +
                          names);
    }
    accs.push_back(std::move(acc));
  }
  const auto base_acc = accumulate(*base);

  MetricsReport report;
  report.baseline = baseline;
  report.emd_label = emd_label(emd_epsilon);
  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    for (std::size_t size : sizes) {
      ReportRow avg{variants[vi].variant, kAverageLabel, size, 0, 0, 0, 0, 0};
      for (const auto& c : classes) {
        const Acc& a = accs[vi].at({size, c});
        const Acc& b = base_acc.at({size, c});
        ReportRow r{variants[vi].variant, c, size, a.cd / a.n, a.emd / a.n, 0, 0, a.n};
        const double bcd = b.cd / b.n, bemd = b.emd / b.n;
        r.cd_reduction = reduction_rate(bcd, r.cd_mean);
        r.emd_reduction = reduction_rate(bemd, r.emd_mean);
        avg.cd_mean += r.cd_mean;
        avg.emd_mean += r.emd_mean;
        avg.cd_reduction += r.cd_reduction;
        avg.emd_reduction += r.emd_reduction;
        avg.n_samples += r.n_samples;
        report.rows.push_back(r);
      }
      const double k = static_cast<double>(classes.size());
      avg.cd_mean /= k;
      avg.emd_mean /= k;
      avg.cd_reduction /= k;
      avg.emd_reduction /= k;
      report.rows.push_back(avg);
    }
  }
  report.verify();
  return report;
}

namespace {

std::string table(const MetricsReport& report, std::size_t input_size, const std::string& title,
                  bool rates) {
  auto cols = report.classes();
  cols.push_back(kAverageLabel);
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> head{"Method", ""};
  head.insert(head.end(), cols.begin(), cols.end());
  cells.push_back(head);
  char buf[64];
  for (const auto& v : report.variants()) {
    if (rates && v == report.baseline) continue;
    for (int metric = 0; metric < 2; ++metric) {
      std::vector<std::string> row{metric == 0 ? v : "",
                                   rates ? (metric == 0 ? "CD\xE2\x86\x93" : "EMD\xE2\x86\x93")
                                         : (metric == 0 ? "CD" : "EMD")};
      for (const auto& c : cols) {
        const ReportRow* r = report.find(v, c, input_size);
        if (!r) {
          row.push_back("-");
          continue;
        }
        if (rates) {
          std::snprintf(buf, sizeof buf, "%.2f%%",
                        100.0 * (metric == 0 ? r->cd_reduction : r->emd_reduction));
        } else {
          std::snprintf(buf, sizeof buf, "%.5f", metric == 0 ? r->cd_mean : r->emd_mean);
        }
        row.push_back(buf);
      }
      cells.push_back(row);
    }
  }
  // Display width: the arrow is three bytes but one column.
  auto width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char c : s) w += (c & 0xC0) != 0x80;
    return w;
  };
  std::vector<std::size_t> widths(head.size(), 0);
  for (const auto& row : cells)
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], width(row[i]));
  std::ostringstream out;
  out << title << " (input " << input_size << " points)\n";
  for (std::size_t ri = 0; ri < cells.size(); ++ri) {
    for (std::size_t i = 0; i < cells[ri].size(); ++i) {
      const std::string& s = cells[ri][i];
      const std::string pad(widths[i] - width(s), ' ');
      out << (i ? "  " : "") << (i < 2 ? s + pad : pad + s);
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace

std::string format_reduction_table(const MetricsReport& report, std::size_t input_size,
                                   const std::string& title) {
  return table(report, input_size, title + ", reduction vs " + report.baseline, true);
}

std::string format_means_table(const MetricsReport& report, std::size_t input_size) {
  return table(report, input_size, "Mean CD / EMD (" + report.emd_label + ")", false);
}

}  // namespace fewpoint

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

#include "fewpoint/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "fewpoint/errors.hpp"

namespace fewpoint {

std::size_t EncoderConfig::pooled_width() const {
  std::size_t w = 0;
  const std::size_t n = per_point_dims.size();
  for (std::size_t i = n - std::min(pooled_levels, n); i < n; ++i) w += per_point_dims[i];
  return w;
}

std::size_t TrainConfig::epochs_for(int stage) const {
  std::size_t e = 0;
  if (stage == 1) e = stage1_epochs;
  if (stage == 2) e = stage2_epochs;
  if (stage == 3) e = stage3_epochs;
  return e ? e : epochs;
}

namespace {

std::string fmt_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string fmt_list(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ParseError("config key '" + key + "': '" + v + "' is not a number");
  }
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ParseError("config key '" + key + "': '" + v + "' is not a non-negative integer");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ParseError("config key '" + key + "': '" + v + "' is not a boolean");
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(static_cast<std::size_t>(parse_uint(key, item)));
  }
  return out;
}

DistanceKind parse_distance(const std::string& key, const std::string& v) {
  if (v == "cd") return DistanceKind::kChamfer;
  if (v == "emd") return DistanceKind::kEmd;
  throw ParseError("config key '" + key + "': expected cd or emd, got '" + v + "'");
}

const char* fmt_distance(DistanceKind k) { return k == DistanceKind::kEmd ? "emd" : "cd"; }

struct Field {
  const char* key;
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, const std::string&, const std::string&)> set;
};

#define FP_REAL(KEY, MEMBER)                                                    \
  Field{KEY, [](const Config& c) { return fmt_real(c.MEMBER); },                \
        [](Config& c, const std::string& k, const std::string& v) {             \
          c.MEMBER = parse_real(k, v);                                          \
        }}
#define FP_UINT(KEY, MEMBER)                                                    \
  Field{KEY, [](const Config& c) { return std::to_string(c.MEMBER); },          \
        [](Config& c, const std::string& k, const std::string& v) {             \
          c.MEMBER = static_cast<decltype(c.MEMBER)>(parse_uint(k, v));         \
        }}
#define FP_BOOL(KEY, MEMBER)                                                    \
  Field{KEY, [](const Config& c) { return std::string(c.MEMBER ? "true" : "false"); }, \
        [](Config& c, const std::string& k, const std::string& v) {             \
          c.MEMBER = parse_bool(k, v);                                          \
        }}
#define FP_LIST(KEY, MEMBER)                                                    \
  Field{KEY, [](const Config& c) { return fmt_list(c.MEMBER); },                \
        [](Config& c, const std::string& k, const std::string& v) {             \
          c.MEMBER = parse_list(k, v);                                          \
        }}
#define FP_DIST(KEY, MEMBER)                                                    \
  Field{KEY, [](const Config& c) { return std::string(fmt_distance(c.MEMBER)); }, \
        [](Config& c, const std::string& k, const std::string& v) {             \
          c.MEMBER = parse_distance(k, v);                                      \
        }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      FP_BOOL("use_transformer_branch", encoder.use_transformer_branch),
      FP_BOOL("use_pointnetpp_local", decoder.use_pointnetpp_local),
      FP_BOOL("use_wgan", gan.use_wgan),
      FP_LIST("encoder.widths", encoder.per_point_dims),
      FP_UINT("encoder.pooled_levels", encoder.pooled_levels),
      FP_UINT("encoder.attention_heads", encoder.attention_heads),
      FP_UINT("encoder.attention_dim", encoder.attention_dim),
      FP_UINT("encoder.attention_blocks", encoder.attention_blocks),
      FP_UINT("encoder.mgfv_dim", encoder.mgfv_dim),
      FP_REAL("encoder.leaky_slope", encoder.leaky_slope),
      FP_UINT("decoder.coarse_n", decoder.coarse_n),
      FP_UINT("decoder.grid_side", decoder.grid_side),
      FP_REAL("decoder.grid_extent", decoder.grid_extent),
      FP_LIST("decoder.coarse_hidden", decoder.coarse_hidden),
      FP_LIST("decoder.fold_hidden", decoder.fold_hidden),
      FP_UINT("decoder.sa_centroids", decoder.sa_centroids),
      FP_REAL("decoder.sa_radius", decoder.sa_radius),
      FP_UINT("decoder.sa_k", decoder.sa_k),
      FP_LIST("decoder.local_hidden", decoder.local_hidden),
      FP_UINT("decoder.local_dim", decoder.local_dim),
      FP_REAL("decoder.leaky_slope", decoder.leaky_slope),
      FP_REAL("gan.gp_lambda", gan.gp_lambda),
      FP_UINT("gan.critic_steps", gan.critic_steps),
      FP_REAL("gan.alpha", gan.alpha),
      FP_REAL("gan.beta", gan.beta),
      FP_UINT("gan.token_count", gan.token_count),
      FP_UINT("gan.memory_units", gan.memory_units),
      FP_LIST("gan.disc_hidden", gan.disc_hidden),
      FP_REAL("gan.leaky_slope", gan.leaky_slope),
      FP_BOOL("gan.literal_bce", gan.literal_bce),
      FP_REAL("train.lr", train.lr),
      FP_REAL("train.lr_decay", train.lr_decay),
      FP_UINT("train.lr_decay_every", train.lr_decay_every),
      FP_UINT("train.epochs", train.epochs),
      FP_UINT("train.stage1_epochs", train.stage1_epochs),
      FP_UINT("train.stage2_epochs", train.stage2_epochs),
      FP_UINT("train.stage3_epochs", train.stage3_epochs),
      FP_UINT("train.batch_size", train.batch_size),
      FP_REAL("train.detail_weight_start", train.detail_weight_start),
      FP_REAL("train.detail_weight_end", train.detail_weight_end),
      FP_DIST("train.d1", train.d1),
      FP_DIST("train.d2", train.d2),
      FP_BOOL("train.cd_squared", train.cd_squared),
      FP_REAL("train.emd_epsilon", train.emd_epsilon),
      FP_REAL("train.stage3_l1_weight", train.stage3_l1_weight),
      FP_BOOL("train.stage3_train_discriminator", train.stage3_train_discriminator),
      FP_REAL("train.adam_beta1", train.adam_beta1),
      FP_REAL("train.adam_beta2", train.adam_beta2),
      FP_REAL("train.adam_eps", train.adam_eps),
      FP_BOOL("train.f32_storage", train.f32_storage),
      FP_UINT("train.input_subsample_min", train.input_subsample_min),
      FP_UINT("train.seed", train.seed),
  };
  return table;
}

#undef FP_REAL
#undef FP_UINT
#undef FP_BOOL
#undef FP_LIST
#undef FP_DIST

}  // namespace

std::vector<std::pair<std::string, std::string>> Config::to_entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Field& f : fields()) out.emplace_back(f.key, f.get(*this));
  return out;
}

std::string Config::to_text() const {
  std::string s;
  for (const auto& [k, v] : to_entries()) s += k + " = " + v + "\n";
  return s;
}

std::vector<std::string> Config::keys() {
  std::vector<std::string> out;
  for (const Field& f : fields()) out.emplace_back(f.key);
  return out;
}

void Config::set(const std::string& key, const std::string& value) {
  for (const Field& f : fields()) {
    if (key == f.key) {
      f.set(*this, key, value);
      return;
    }
  }
  throw ParseError("unknown config key '" + key + "'");
}

void Config::validate() const {
  auto fail = [](const std::string& m) { throw ContractError("config: " + m); };
  if (encoder.per_point_dims.empty()) fail("encoder.widths is empty");
  for (std::size_t w : encoder.per_point_dims)
    if (w == 0) fail("encoder.widths contains 0");
  if (encoder.pooled_levels == 0 || encoder.pooled_levels > encoder.per_point_dims.size())
    fail("encoder.pooled_levels must select existing layers");
  if (encoder.attention_heads != 1) fail("only single-head attention is implemented");
  if (encoder.attention_dim == 0 || encoder.mgfv_dim == 0) fail("encoder widths must be positive");
  if (!(encoder.leaky_slope > 0.0 && encoder.leaky_slope < 1.0)) fail("encoder.leaky_slope must be in (0,1)");
  if (decoder.coarse_n == 0 || decoder.grid_side == 0) fail("decoder sizes must be positive");
  if (decoder.centroids() > decoder.coarse_n) fail("decoder.sa_centroids exceeds coarse_n");
  if (decoder.sa_k == 0 || !(decoder.sa_radius > 0.0)) fail("decoder ball query needs k >= 1, radius > 0");
  if (decoder.local_dim == 0) fail("decoder.local_dim must be positive");
  if (!(decoder.leaky_slope > 0.0 && decoder.leaky_slope < 1.0)) fail("decoder.leaky_slope must be in (0,1)");
  if (gan.token_count == 0 || encoder.mgfv_dim % gan.token_count != 0)
    fail("gan.token_count must divide encoder.mgfv_dim");
  if (gan.gp_lambda < 0.0) fail("gan.gp_lambda must be >= 0");
  if (gan.critic_steps == 0) fail("gan.critic_steps must be >= 1");
  if (gan.memory_units == 0) fail("gan.memory_units must be >= 1");
  if (!(gan.leaky_slope > 0.0 && gan.leaky_slope < 1.0)) fail("gan.leaky_slope must be in (0,1)");
  if (!(train.lr > 0.0)) fail("train.lr must be positive");
  if (train.batch_size == 0) fail("train.batch_size must be >= 1");
  if (train.lr_decay_every == 0) fail("train.lr_decay_every must be >= 1");
  if (!(train.emd_epsilon > 0.0)) fail("train.emd_epsilon must be positive");
  if (train.detail_weight_start > train.detail_weight_end) fail("detail weight ramp must be non-decreasing");
}

Config Config::from_text(const std::string& text, const std::string& source,
                         const Config& base) {
  Config c = base;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(source + ": line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      c.set(key, value);
    } catch (const ParseError& e) {
      throw ParseError(source + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

Config Config::from_file(const std::filesystem::path& path, const Config& base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str(), path.string(), base);
}

Config desk_config() {
  Config c;
  c.encoder.per_point_dims = {8, 16, 32, 64, 128};
  c.encoder.attention_dim = 32;
  c.encoder.mgfv_dim = 128;
  c.decoder.coarse_n = 64;
  c.decoder.grid_side = 4;
  c.decoder.coarse_hidden = {128, 128};
  c.decoder.fold_hidden = {64, 64};
  c.decoder.local_hidden = {16};
  c.decoder.local_dim = 16;
  c.gan.token_count = 16;
  c.gan.memory_units = 16;
  c.gan.disc_hidden = {32};
  return c;
}

std::string variant_name(const Config& c) {
  const bool t = c.encoder.use_transformer_branch;
  const bool p = c.decoder.use_pointnetpp_local;
  const bool w = c.gan.use_wgan;
  if (t && p && w) return "full";
  if (!t && !p && !w) return "pcn";
  if (p && !t && !w) return "pcn+pointnet++";
  if (t && !p && !w) return "pcn+transformer";
  if (w && !t && !p) return "pcn+wgan";
  std::string s = "pcn";
  if (p) s += "+pointnet++";
  if (t) s += "+transformer";
  if (w) s += "+wgan";
  return s;
}

}  // namespace fewpoint

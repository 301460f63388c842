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

#include "fewpoint/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <map>
#include <sstream>

#include "fewpoint/errors.hpp"

namespace fewpoint {

namespace {

constexpr char kMagic[4] = {'F', 'P', 'C', 'K'};
constexpr const char* kConfigTag = "config:";
constexpr const char* kStageTag = "meta.completed_stage";

struct RawTensor {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) {
    u8(v & 0xff);
    u8(v >> 8);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8((v >> (8 * i)) & 0xff);
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8((v >> (8 * i)) & 0xff);
  }
  void tensor(const std::string& name, const Shape& shape, std::span<const double> data) {
    if (name.size() > 0xffff) throw ContractError("checkpoint: name too long: " + name);
    if (shape.size() > 0xff) throw ContractError("checkpoint: rank too large for " + name);
    u16(static_cast<std::uint16_t>(name.size()));
    bytes(name.data(), name.size());
    u8(static_cast<std::uint8_t>(shape.size()));
    for (std::size_t d : shape) u32(static_cast<std::uint32_t>(d));
    for (double v : data) u32(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  void marker(const std::string& name) {
    const double zero = 0.0;
    tensor(name, {1}, std::span<const double>(&zero, 1));
  }
  void value(const std::string& name, double v) { tensor(name, {1}, std::span<const double>(&v, 1)); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& data, std::string source) : data_(data), source_(std::move(source)) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint16_t u16() {
    const std::uint16_t lo = u8();
    return static_cast<std::uint16_t>(lo | (static_cast<std::uint16_t>(u8()) << 8));
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  RawTensor tensor() {
    RawTensor t;
    t.name = str(u16());
    const std::size_t rank = u8();
    std::size_t count = 1;
    for (std::size_t i = 0; i < rank; ++i) {
      t.shape.push_back(u32());
      count *= t.shape.back();
    }
    if (count > (data_.size() - pos_) / 4) fail("tensor '" + t.name + "' overruns the file");
    t.values.resize(count);
    for (float& f : t.values) f = std::bit_cast<float>(u32());
    return t;
  }
  bool done() const { return pos_ == data_.size(); }
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(source_ + ": " + what);
  }

 private:
  void need(std::size_t n) {
    if (data_.size() - pos_ < n) fail("truncated checkpoint");
  }
  const std::string& data_;
  std::string source_;
  std::size_t pos_ = 0;
};

bool starts_with(const std::string& s, const char* prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

const OptimizerState* TrainState::find(const std::string& name) const {
  for (const auto& o : optimizers)
    if (o.name == name) return &o;
  return nullptr;
}

std::string serialize_checkpoint(const Model& model, const TrainState& state) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  const auto entries = model.config().to_entries();
  const auto& params = model.params().entries();
  w.u32(static_cast<std::uint32_t>(entries.size() + 1 + params.size()));
  for (const auto& [k, v] : entries) w.marker(std::string(kConfigTag) + k + "=" + v);
  w.value(kStageTag, model.completed_stage());
  for (const auto& [name, t] : params) w.tensor(name, t.shape(), t.data());

  std::uint32_t count = 2;
  for (const auto& o : state.optimizers) count += 1 + 2 * static_cast<std::uint32_t>(o.moments.size());
  w.u32(count);
  w.value("opt.stage", state.stage);
  w.value("opt.epoch", static_cast<double>(state.epoch));
  for (const auto& o : state.optimizers) {
    if (o.steps >= (1u << 24)) throw ContractError("checkpoint: step count exceeds exact float range");
    w.value("opt." + o.name + ".step", static_cast<double>(o.steps));
    for (const auto& [pname, mo] : o.moments) {
      const Shape& shape = model.params().get(pname).shape();
      w.tensor("opt." + o.name + ".m." + pname, shape, mo.m);
      w.tensor("opt." + o.name + ".v." + pname, shape, mo.v);
    }
  }
  w.u64(state.rng_state[0]);
  w.u64(state.rng_state[1]);
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& source) {
  Reader r(bytes, source);
  if (r.str(4) != std::string(kMagic, 4)) r.fail("not a checkpoint (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    r.fail("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32();
  std::vector<RawTensor> tensors;
  Config config;
  int completed = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    RawTensor t = r.tensor();
    if (starts_with(t.name, kConfigTag)) {
      const std::string kv = t.name.substr(std::string(kConfigTag).size());
      const auto eq = kv.find('=');
      if (eq == std::string::npos) r.fail("malformed config entry '" + t.name + "'");
      try {
        config.set(kv.substr(0, eq), kv.substr(eq + 1));
      } catch (const ParseError& e) {
        r.fail(e.what());
      }
    } else if (t.name == kStageTag) {
      completed = static_cast<int>(t.values.at(0));
    } else {
      tensors.push_back(std::move(t));
    }
  }

  Checkpoint ck;
  ck.model = std::make_unique<Model>(config);
  ck.model->set_completed_stage(completed);
  ParamStore& store = ck.model->params();
  std::map<std::string, bool> seen;
  for (const auto& t : tensors) {
    if (!store.contains(t.name)) r.fail("unknown parameter '" + t.name + "'");
    Tensor p = store.get(t.name);
    if (p.shape() != t.shape) {
      r.fail("parameter '" + t.name + "' has shape " + shape_str(t.shape) + ", model expects " +
             shape_str(p.shape()));
    }
    auto d = p.mutable_data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = t.values[i];
    seen[t.name] = true;
  }
  for (const auto& [name, t] : store.entries()) {
    if (!seen.count(name)) r.fail("missing parameter '" + name + "'");
  }

  const std::uint32_t opt_count = r.u32();
  std::map<std::string, OptimizerState> opts;
  std::vector<std::string> order;
  auto opt_for = [&](const std::string& name) -> OptimizerState& {
    if (!opts.count(name)) {
      order.push_back(name);
      opts[name].name = name;
    }
    return opts[name];
  };
  for (std::uint32_t i = 0; i < opt_count; ++i) {
    RawTensor t = r.tensor();
    if (t.name == "opt.stage") {
      ck.state.stage = static_cast<int>(t.values.at(0));
      continue;
    }
    if (t.name == "opt.epoch") {
      ck.state.epoch = static_cast<std::size_t>(t.values.at(0));
      continue;
    }
    // opt.<optimizer>.step | opt.<optimizer>.{m,v}.<param>
    if (!starts_with(t.name, "opt.")) r.fail("unknown optimizer entry '" + t.name + "'");
    const std::string rest = t.name.substr(4);
    const auto dot = rest.find('.');
    if (dot == std::string::npos) r.fail("unknown optimizer entry '" + t.name + "'");
    const std::string oname = rest.substr(0, dot);
    const std::string field = rest.substr(dot + 1);
    OptimizerState& o = opt_for(oname);
    if (field == "step") {
      o.steps = static_cast<std::size_t>(t.values.at(0));
    } else if (starts_with(field, "m.") || starts_with(field, "v.")) {
      const std::string pname = field.substr(2);
      if (!store.contains(pname)) r.fail("optimizer entry for unknown parameter '" + pname + "'");
      if (store.get(pname).shape() != t.shape) r.fail("optimizer entry '" + t.name + "' has the wrong shape");
      auto it = std::find_if(o.moments.begin(), o.moments.end(),
                             [&](const auto& e) { return e.first == pname; });
      if (it == o.moments.end()) {
        o.moments.emplace_back(pname, AdamMoments{});
        it = std::prev(o.moments.end());
      }
      auto& dst = field[0] == 'm' ? it->second.m : it->second.v;
      dst.assign(t.values.begin(), t.values.end());
    } else {
      r.fail("unknown optimizer entry '" + t.name + "'");
    }
  }
  for (const auto& name : order) ck.state.optimizers.push_back(std::move(opts[name]));
  ck.state.rng_state[0] = r.u64();
  ck.state.rng_state[1] = r.u64();
  if (!r.done()) r.fail("trailing bytes after the rng state");
  return ck;
}

void save_checkpoint(const Model& model, const TrainState& state,
                     const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(model, state);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str(), path.string());
}

}  // namespace fewpoint

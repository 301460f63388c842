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

#ifndef FEWPOINT_CHECKPOINT_HPP_
#define FEWPOINT_CHECKPOINT_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "fewpoint/model.hpp"
#include "fewpoint/optim.hpp"

namespace fewpoint {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct OptimizerState {
  std::string name;
  std::size_t steps = 0;
  // Parallel to the optimizer's parameter list.
  std::vector<std::pair<std::string, AdamMoments>> moments;
};

// Training progress that must survive a save/load for resumption.
struct TrainState {
  int stage = 0;           // stage the optimizer state belongs to; 0 = none
  std::size_t epoch = 0;   // epochs completed within `stage`
  std::vector<OptimizerState> optimizers;
  std::array<std::uint64_t, 2> rng_state{0, 0};

  const OptimizerState* find(const std::string& name) const;
};

struct Checkpoint {
  std::unique_ptr<Model> model;
  TrainState state;
};

// Layout (all integers little-endian):
//   "FPCK" | version u32 | count u32 | count x tensor
//   | opt_count u32 | opt_count x tensor | rng state (2 x u64)
// tensor = name_len u16 | name | rank u8 | rank x u32 dims | float32 payload.
// The model section also carries the configuration as payload-free entries
// named "config:<key>=<value>" and the completed stage as "meta.completed_stage".
void save_checkpoint(const Model& model, const TrainState& state,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// In-memory variants used by the file functions and by tests.
std::string serialize_checkpoint(const Model& model, const TrainState& state);
Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& source);

}  // namespace fewpoint

#endif  // FEWPOINT_CHECKPOINT_HPP_

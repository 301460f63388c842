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

#ifndef FEWPOINT_DECODER_HPP_
#define FEWPOINT_DECODER_HPP_

#include "fewpoint/config.hpp"
#include "fewpoint/nn.hpp"
#include "fewpoint/tensor.hpp"

namespace fewpoint {

struct DecodedClouds {
  Tensor coarse;  // [coarse_n, 3]
  Tensor detail;  // [coarse_n * grid_side^2, 3]
};

// Coarse-to-fine decoder. A fully-connected stack emits the coarse cloud, one
// set-abstraction level extracts local features from it, and a folding
// network deforms a small 2D grid around every coarse point.
class Decoder {
 public:
  Decoder() = default;
  Decoder(ParamStore& store, const DecoderConfig& config, std::size_t mgfv_dim, Rng& rng);

  // mgfv [1, mgfv_dim] -> [coarse_n, 3].
  Tensor coarse_generate(const Tensor& mgfv) const;

  // coarse [coarse_n,3] -> [coarse_n, local_dim]. Grouping indices are chosen
  // on the current values and treated as constants; gradients flow through
  // the neighbour-minus-centroid offsets.
  Tensor local_features(const Tensor& coarse) const;

  // `local` is ignored (may be undefined) when the PointNet++ branch is off.
  Tensor fold(const Tensor& coarse, const Tensor& local, const Tensor& mgfv) const;

  DecodedClouds decode(const Tensor& mgfv) const;

  // The g x g folding grid over [-extent, extent]^2, as [g*g, 2].
  Tensor grid() const;

  const DecoderConfig& config() const { return config_; }
  Linear& fold_output() { return fold_layers_.back(); }

 private:
  DecoderConfig config_;
  std::size_t mgfv_dim_ = 0;
  Mlp coarse_mlp_;
  Mlp local_mlp_;
  // First fold layer acts on [u, v, coarse, local, mgfv]; stored as one
  // weight and split by rows at run time.
  Tensor fold_in_weight_, fold_in_bias_;
  std::vector<Linear> fold_layers_;
};

}  // namespace fewpoint

#endif  // FEWPOINT_DECODER_HPP_

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

#ifndef FEWPOINT_METRICS_HPP_
#define FEWPOINT_METRICS_HPP_

#include <cstddef>
#include <vector>

#include "fewpoint/pointcloud.hpp"
#include "fewpoint/tensor.hpp"

namespace fewpoint {

// Chamfer distance: mean nearest-neighbour distance from S1 to S2 plus from
// S2 to S1. Unsquared Euclidean by default; sizes may differ.
double chamfer(const PointCloud& s1, const PointCloud& s2, bool squared = false);

// Differentiable chamfer distance between [n,3] and [m,3] tensors. At a zero
// distance the unsquared gradient is taken as zero.
Tensor chamfer_loss(const Tensor& s1, const Tensor& s2, bool squared = false);

// A bijection S1 -> S2: permutation[i] is the index in S2 matched to S1[i].
struct Assignment {
  std::vector<std::size_t> permutation;
  double cost = 0.0;  // mean matched Euclidean distance
};

inline constexpr std::size_t kExactEmdLimit = 256;

// Dense square cost matrix, row-major.
struct CostMatrix {
  std::size_t n = 0;
  std::vector<double> values;
  double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

CostMatrix euclidean_costs(const PointCloud& s1, const PointCloud& s2);

// Minimum-cost perfect matching (Hungarian method with potentials, O(n^3)).
// Returns the permutation; the summed cost is written to total_cost.
std::vector<std::size_t> solve_assignment_exact(const CostMatrix& costs,
                                                double* total_cost = nullptr);

struct AuctionStats {
  std::size_t phases = 0;
  std::size_t bids = 0;
  double lower_bound = 0.0;  // certified lower bound on the optimal total cost
};

// Forward auction with epsilon scaling. Phases stop once the matching's cost
// is certified, through the price duals, to be within (1 + rel_epsilon) of
// the optimum. Throws ConvergenceError past max_bids.
std::vector<std::size_t> solve_assignment_auction(const CostMatrix& costs,
                                                  double rel_epsilon,
                                                  double* total_cost = nullptr,
                                                  AuctionStats* stats = nullptr,
                                                  std::size_t max_bids = 200000000);

// Exact EMD; requires |S1| == |S2| <= limit.
Assignment emd_exact(const PointCloud& s1, const PointCloud& s2,
                     std::size_t limit = kExactEmdLimit);
// (1 + epsilon)-approximate EMD.
Assignment emd_auction(const PointCloud& s1, const PointCloud& s2, double epsilon);

// Differentiable mean matched distance for a fixed matching.
Tensor emd_loss(const Tensor& s1, const Tensor& s2, const Assignment& matching);

// Exactly k nearest indices per center, ties by lowest index.
std::vector<std::vector<std::size_t>> knn(const PointCloud& centers,
                                          const PointCloud& cloud, std::size_t k);

// Up to k indices within `radius` of each center (nearest first), padded to
// exactly k by repeating the nearest index.
std::vector<std::vector<std::size_t>> ball_query(const PointCloud& centers,
                                                 const PointCloud& cloud,
                                                 std::size_t k, double radius);

// (baseline - ours) / baseline. Negative when ours is worse.
double reduction_rate(double baseline, double ours);

}  // namespace fewpoint

#endif  // FEWPOINT_METRICS_HPP_

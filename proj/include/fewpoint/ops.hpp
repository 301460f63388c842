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

#ifndef FEWPOINT_OPS_HPP_
#define FEWPOINT_OPS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "fewpoint/tensor.hpp"

// Differentiable tensor operations.
//
// Ops marked (2nd) have backward passes built from other (2nd) ops and may be
// differentiated twice; this is the set the critic network and its gradient
// penalty are restricted to. The remaining ops are first-order only and raise
// CapabilityError when traversed with create_graph.

namespace fewpoint {

// --- elementwise, identical shapes (2nd) ---
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

// --- unary (2nd) ---
Tensor neg(const Tensor& x);
Tensor scale(const Tensor& x, double s);
Tensor add_scalar(const Tensor& x, double s);
// max(x, slope*x); the derivative at exactly 0 takes the positive branch.
Tensor leaky_relu(const Tensor& x, double slope);
Tensor sigmoid(const Tensor& x);
Tensor log(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor square(const Tensor& x);
Tensor sqrt(const Tensor& x);
// Gradient is zero outside [lo, hi].
Tensor clamp(const Tensor& x, double lo, double hi);

// --- shape (2nd) ---
Tensor reshape(const Tensor& x, Shape shape);
Tensor transpose(const Tensor& x);  // rank 2
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin,
             std::size_t end);
// Inverse of slice: zero-pads `before` and `after` entries along axis.
Tensor pad(const Tensor& x, std::size_t axis, std::size_t before,
           std::size_t after);
// Expands size-1 dimensions (same rank) or a single-element tensor.
Tensor broadcast_to(const Tensor& x, const Shape& shape);
// Sums a tensor down to a broadcast-compatible shape; adjoint of broadcast_to.
Tensor reduce_to(const Tensor& x, const Shape& shape);

// --- reductions (2nd) ---
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// Keeps the reduced axis with extent 1.
Tensor sum_axis(const Tensor& x, std::size_t axis);
// Euclidean norm of all entries; zero gradient at the origin.
Tensor l2_norm(const Tensor& x);
Tensor l1_norm(const Tensor& x);

// --- linear algebra / layers (2nd) ---
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false,
              bool trans_b = false);
// x[m,n] + b[n] on every row.
Tensor add_bias(const Tensor& x, const Tensor& b);
// Max-subtracted softmax along `axis`.
Tensor softmax(const Tensor& x, std::size_t axis);
// x / (sum |x| along axis + eps).
Tensor normalize_l1(const Tensor& x, std::size_t axis, double eps = 1e-9);
// x * s for a single-element tensor s.
Tensor mul_scalar(const Tensor& x, const Tensor& s);

// --- point-set ops (first order) ---
// Columnwise max over rows of f[n,d] -> [d]. The gradient goes to the first
// row attaining each column's max.
Tensor max_pool_points(const Tensor& f);
// Columnwise max over consecutive groups of `group` rows: [m*group,d] -> [m,d].
Tensor group_max(const Tensor& f, std::size_t group);
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows);
// Row i is repeated `times` times consecutively: [n,d] -> [n*times,d].
Tensor repeat_rows(const Tensor& x, std::size_t times);
// The whole block is stacked `times` times: [n,d] -> [times*n,d].
Tensor tile_rows(const Tensor& x, std::size_t times);
// Euclidean norm per row: [n,d] -> [n]; zero gradient for zero rows.
Tensor row_norms(const Tensor& x);

}  // namespace fewpoint

#endif  // FEWPOINT_OPS_HPP_

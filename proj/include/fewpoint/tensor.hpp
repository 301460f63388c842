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

#ifndef FEWPOINT_TENSOR_HPP_
#define FEWPOINT_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fewpoint {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tensor;

// One recorded operation. A node only references its inputs, never its
// output, so graphs are freed as soon as the last output handle goes away.
struct Node {
  std::string op;
  std::vector<Tensor> inputs;
  // Maps the gradient of the output to one gradient per input (an undefined
  // Tensor means "no contribution"). Implementations are written with Tensor
  // ops so that, when the node is second-order capable, the gradient itself
  // is recorded and can be differentiated again.
  std::function<std::vector<Tensor>(const Tensor& grad_out)> backward;
  bool second_order = false;
};

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;  // empty until a backward pass reaches it
  std::shared_ptr<Node> node;
};

// Dense row-major array of doubles with shared handle semantics: copies of a
// Tensor alias the same storage, like the graph handles of most autodiff
// engines.
class Tensor {
 public:
  Tensor() = default;

  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(impl_); }

  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t i) const { return impl_->shape.at(i); }
  std::size_t numel() const { return impl_->data.size(); }

  std::span<const double> data() const { return impl_->data; }
  // Write access is for leaves (parameters, inputs) only.
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t i) const { return impl_->data.at(i); }
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on);
  bool is_leaf() const { return !impl_->node; }

  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const double> grad() const { return impl_->grad; }
  std::span<double> mutable_grad();
  void zero_grad();

  // Same values, no history, no gradient requirement.
  Tensor detach() const;
  Tensor clone() const;

  const std::shared_ptr<Node>& node() const { return impl_->node; }
  TensorImpl* impl() const { return impl_.get(); }

  bool same(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
  friend Tensor make_result(std::string op, Shape shape,
                            std::vector<double> data,
                            std::vector<Tensor> inputs,
                            std::function<std::vector<Tensor>(const Tensor&)> backward,
                            bool second_order);

  std::shared_ptr<TensorImpl> impl_;
};

// Builds an op output. A node is attached only when recording is enabled and
// at least one input requires a gradient.
Tensor make_result(std::string op, Shape shape, std::vector<double> data,
                   std::vector<Tensor> inputs,
                   std::function<std::vector<Tensor>(const Tensor&)> backward,
                   bool second_order);

// Recording switch, thread-local so distinct graphs can run on distinct
// threads.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

class GradModeGuard {
 public:
  explicit GradModeGuard(bool enabled);
  ~GradModeGuard();
  GradModeGuard(const GradModeGuard&) = delete;
  GradModeGuard& operator=(const GradModeGuard&) = delete;

 private:
  bool previous_;
};

// Reverse-mode pass from a scalar loss. Gradients accumulate into every
// reachable tensor that requires grad; calling twice without zero_grad adds
// the contributions twice.
void backward(const Tensor& loss);

// Functional gradient of a scalar `output` with respect to `inputs`. Nothing
// is accumulated into .grad(). With create_graph the returned tensors carry
// their own history, which is how second-order terms such as a gradient
// penalty are differentiated; every node on the path must then be
// second-order capable or a CapabilityError naming the op is thrown.
std::vector<Tensor> grad(const Tensor& output, const std::vector<Tensor>& inputs,
                         bool create_graph = false);

}  // namespace fewpoint

#endif  // FEWPOINT_TENSOR_HPP_

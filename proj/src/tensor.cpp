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

#include "fewpoint/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "fewpoint/errors.hpp"
#include "fewpoint/ops.hpp"

namespace fewpoint {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data,
                         bool requires_grad) {
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor extents must be positive, got " +
                                     shape_str(shape));
  }
  if (shape_numel(shape) != data.size()) {
    throw DimensionError("shape " + shape_str(shape) + " does not match " +
                         std::to_string(data.size()) + " values");
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return from_data(std::move(shape), std::vector<double>(n, 0.0),
                   requires_grad);
}

Tensor Tensor::full(Shape shape, double value) {
  const std::size_t n = shape_numel(shape);
  return from_data(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({}, {value}, requires_grad);
}

std::span<double> Tensor::mutable_data() {
  if (impl_->node) {
    throw ContractError("mutable_data() on a non-leaf tensor produced by '" +
                        impl_->node->op + "'");
  }
  return impl_->data;
}

double Tensor::item() const {
  if (impl_->data.size() != 1) {
    throw DimensionError("item() on tensor of shape " +
                         shape_str(impl_->shape));
  }
  return impl_->data[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  if (rank() != 2) throw DimensionError("at(r, c) needs a rank-2 tensor");
  return impl_->data.at(r * impl_->shape[1] + c);
}

void Tensor::set_requires_grad(bool on) {
  if (impl_->node && !on) {
    throw ContractError("cannot clear requires_grad on a non-leaf tensor");
  }
  impl_->requires_grad = on;
}

std::span<double> Tensor::mutable_grad() {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return from_data(impl_->shape, impl_->data); }

Tensor Tensor::clone() const {
  return from_data(impl_->shape, impl_->data, impl_->requires_grad && !impl_->node);
}

Tensor make_result(std::string op, Shape shape, std::vector<double> data,
                   std::vector<Tensor> inputs,
                   std::function<std::vector<Tensor>(const Tensor&)> backward,
                   bool second_order) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  bool needs = false;
  if (g_grad_enabled) {
    for (const Tensor& t : inputs) {
      if (t.defined() && t.requires_grad()) {
        needs = true;
        break;
      }
    }
  }
  if (needs) {
    impl->requires_grad = true;
    auto node = std::make_shared<Node>();
    node->op = std::move(op);
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
    node->second_order = second_order;
    impl->node = std::move(node);
  }
  return Tensor(std::move(impl));
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

GradModeGuard::GradModeGuard(bool enabled) : previous_(g_grad_enabled) {
  g_grad_enabled = enabled;
}
GradModeGuard::~GradModeGuard() { g_grad_enabled = previous_; }

namespace {

// Reverse topological order (output first) of every requires-grad tensor
// reachable from `root`.
std::vector<Tensor> reverse_topo(const Tensor& root) {
  std::vector<Tensor> order;
  std::unordered_set<const TensorImpl*> visited;
  struct Frame {
    Tensor t;
    std::size_t next = 0;
  };
  std::vector<Frame> stack;
  stack.push_back({root, 0});
  visited.insert(root.impl());
  while (!stack.empty()) {
    Frame& f = stack.back();
    const auto& node = f.t.node();
    if (node && f.next < node->inputs.size()) {
      const Tensor& in = node->inputs[f.next++];
      if (in.defined() && in.requires_grad() && !visited.count(in.impl())) {
        visited.insert(in.impl());
        stack.push_back({in, 0});
      }
      continue;
    }
    order.push_back(f.t);
    stack.pop_back();
  }
  std::reverse(order.begin(), order.end());
  return order;
}

std::unordered_map<const TensorImpl*, Tensor> run_backward(
    const Tensor& root, bool create_graph) {
  std::unordered_map<const TensorImpl*, Tensor> grads;
  if (!root.requires_grad()) return grads;
  const std::vector<Tensor> order = reverse_topo(root);
  {
    NoGradGuard ng;
    grads[root.impl()] = Tensor::full(root.shape(), 1.0);
  }
  GradModeGuard mode(create_graph);
  for (const Tensor& t : order) {
    const auto& node = t.node();
    if (!node) continue;
    auto it = grads.find(t.impl());
    if (it == grads.end()) continue;
    const Tensor g = it->second;
    if (create_graph && !node->second_order) {
      throw CapabilityError("op '" + node->op +
                            "' does not support second-order differentiation");
    }
    std::vector<Tensor> in_grads = node->backward(g);
    for (std::size_t i = 0; i < node->inputs.size(); ++i) {
      const Tensor& in = node->inputs[i];
      if (!in.defined() || !in.requires_grad()) continue;
      if (i >= in_grads.size() || !in_grads[i].defined()) continue;
      if (in_grads[i].shape() != in.shape()) {
        throw DimensionError("backward of '" + node->op + "' produced " +
                             shape_str(in_grads[i].shape()) + " for input " +
                             shape_str(in.shape()));
      }
      auto existing = grads.find(in.impl());
      if (existing == grads.end()) {
        grads.emplace(in.impl(), in_grads[i]);
      } else {
        existing->second = add(existing->second, in_grads[i]);
      }
    }
  }
  return grads;
}

}  // namespace

void backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        shape_str(loss.shape()));
  }
  if (!loss.requires_grad()) return;
  const std::vector<Tensor> order = reverse_topo(loss);
  auto grads = run_backward(loss, false);
  for (const Tensor& t : order) {
    auto it = grads.find(t.impl());
    if (it == grads.end()) continue;
    TensorImpl* impl = t.impl();
    if (impl->grad.empty()) impl->grad.assign(impl->data.size(), 0.0);
    const auto g = it->second.data();
    for (std::size_t i = 0; i < g.size(); ++i) impl->grad[i] += g[i];
  }
}

std::vector<Tensor> grad(const Tensor& output, const std::vector<Tensor>& inputs,
                         bool create_graph) {
  if (output.numel() != 1) {
    throw ContractError("grad() needs a scalar output, got shape " +
                        shape_str(output.shape()));
  }
  auto grads = run_backward(output, create_graph);
  std::vector<Tensor> out;
  out.reserve(inputs.size());
  for (const Tensor& in : inputs) {
    auto it = grads.find(in.impl());
    if (it == grads.end()) {
      out.push_back(Tensor::zeros(in.shape()));
    } else {
      out.push_back(it->second);
    }
  }
  return out;
}

}  // namespace fewpoint

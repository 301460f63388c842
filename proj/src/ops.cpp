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

#include "fewpoint/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fewpoint/errors.hpp"

namespace fewpoint {

namespace {

using Grads = std::vector<Tensor>;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()) + " differ");
  }
}

void require_rank(const Tensor& x, std::size_t rank, const char* op) {
  if (x.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " +
                         std::to_string(rank) + ", got " + shape_str(x.shape()));
  }
}

struct AxisLayout {
  std::size_t outer = 1;
  std::size_t n = 1;
  std::size_t inner = 1;
};

AxisLayout axis_layout(const Shape& shape, std::size_t axis, const char* op) {
  if (axis >= shape.size()) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for " + shape_str(shape));
  }
  AxisLayout l;
  for (std::size_t i = 0; i < axis; ++i) l.outer *= shape[i];
  l.n = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) l.inner *= shape[i];
  return l;
}

template <typename F>
std::vector<double> map_unary(const Tensor& x, F f) {
  const auto xs = x.data();
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = f(xs[i]);
  return out;
}

Tensor constant_like(const Tensor& x, std::vector<double> values) {
  return Tensor::from_data(x.shape(), std::move(values));
}

// Source offset for every target element when broadcasting `src` to `dst`.
std::vector<std::size_t> broadcast_index(const Shape& src, const Shape& dst,
                                         const char* op) {
  const std::size_t total = shape_numel(dst);
  std::vector<std::size_t> index(total, 0);
  if (shape_numel(src) == 1) return index;
  if (src.size() != dst.size()) {
    throw DimensionError(std::string(op) + ": cannot broadcast " +
                         shape_str(src) + " to " + shape_str(dst));
  }
  const std::size_t r = dst.size();
  std::vector<std::size_t> src_stride(r, 0);
  std::size_t s = 1;
  for (std::size_t d = r; d-- > 0;) {
    if (src[d] != dst[d] && src[d] != 1) {
      throw DimensionError(std::string(op) + ": cannot broadcast " +
                           shape_str(src) + " to " + shape_str(dst));
    }
    src_stride[d] = src[d] == 1 ? 0 : s;
    s *= src[d];
  }
  std::vector<std::size_t> counter(r, 0);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < total; ++i) {
    index[i] = offset;
    for (std::size_t d = r; d-- > 0;) {
      ++counter[d];
      offset += src_stride[d];
      if (counter[d] < dst[d]) break;
      offset -= src_stride[d] * counter[d];
      counter[d] = 0;
    }
  }
  return index;
}

}  // namespace

// ---------------------------------------------------------------- elementwise

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  const auto as = a.data();
  const auto bs = b.data();
  std::vector<double> out(as.size());
  for (std::size_t i = 0; i < as.size(); ++i) out[i] = as[i] + bs[i];
  return make_result("add", a.shape(), std::move(out), {a, b},
                     [](const Tensor& g) { return Grads{g, g}; }, true);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  const auto as = a.data();
  const auto bs = b.data();
  std::vector<double> out(as.size());
  for (std::size_t i = 0; i < as.size(); ++i) out[i] = as[i] - bs[i];
  return make_result("sub", a.shape(), std::move(out), {a, b},
                     [](const Tensor& g) { return Grads{g, neg(g)}; }, true);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  const auto as = a.data();
  const auto bs = b.data();
  std::vector<double> out(as.size());
  for (std::size_t i = 0; i < as.size(); ++i) out[i] = as[i] * bs[i];
  return make_result(
      "mul", a.shape(), std::move(out), {a, b},
      [a, b](const Tensor& g) {
        Grads r(2);
        if (a.requires_grad()) r[0] = mul(g, b);
        if (b.requires_grad()) r[1] = mul(g, a);
        return r;
      },
      true);
}

Tensor div(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "div");
  const auto as = a.data();
  const auto bs = b.data();
  std::vector<double> out(as.size());
  for (std::size_t i = 0; i < as.size(); ++i) out[i] = as[i] / bs[i];
  return make_result(
      "div", a.shape(), std::move(out), {a, b},
      [a, b](const Tensor& g) {
        Grads r(2);
        if (a.requires_grad()) r[0] = div(g, b);
        if (b.requires_grad()) r[1] = neg(div(mul(g, a), square(b)));
        return r;
      },
      true);
}

// ---------------------------------------------------------------- unary

Tensor neg(const Tensor& x) { return scale(x, -1.0); }

Tensor scale(const Tensor& x, double s) {
  return make_result("scale", x.shape(),
                     map_unary(x, [s](double v) { return v * s; }), {x},
                     [s](const Tensor& g) { return Grads{scale(g, s)}; }, true);
}

Tensor add_scalar(const Tensor& x, double s) {
  return make_result("add_scalar", x.shape(),
                     map_unary(x, [s](double v) { return v + s; }), {x},
                     [](const Tensor& g) { return Grads{g}; }, true);
}

Tensor leaky_relu(const Tensor& x, double slope) {
  return make_result(
      "leaky_relu", x.shape(),
      map_unary(x, [slope](double v) { return v >= 0.0 ? v : slope * v; }), {x},
      [x, slope](const Tensor& g) {
        Tensor mask = constant_like(
            x, map_unary(x, [slope](double v) { return v >= 0.0 ? 1.0 : slope; }));
        return Grads{mul(g, mask)};
      },
      true);
}

Tensor sigmoid(const Tensor& x) {
  auto f = [](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  };
  return make_result(
      "sigmoid", x.shape(), map_unary(x, f), {x},
      [x](const Tensor& g) {
        Tensor y = sigmoid(x);
        return Grads{mul(g, mul(y, add_scalar(neg(y), 1.0)))};
      },
      true);
}

Tensor log(const Tensor& x) {
  return make_result("log", x.shape(),
                     map_unary(x, [](double v) { return std::log(v); }), {x},
                     [x](const Tensor& g) { return Grads{div(g, x)}; }, true);
}

Tensor abs(const Tensor& x) {
  return make_result(
      "abs", x.shape(), map_unary(x, [](double v) { return std::fabs(v); }), {x},
      [x](const Tensor& g) {
        Tensor sign = constant_like(x, map_unary(x, [](double v) {
                                      return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
                                    }));
        return Grads{mul(g, sign)};
      },
      true);
}

Tensor square(const Tensor& x) {
  return make_result("square", x.shape(),
                     map_unary(x, [](double v) { return v * v; }), {x},
                     [x](const Tensor& g) { return Grads{scale(mul(g, x), 2.0)}; },
                     true);
}

Tensor sqrt(const Tensor& x) {
  return make_result(
      "sqrt", x.shape(), map_unary(x, [](double v) { return std::sqrt(v); }), {x},
      [x](const Tensor& g) { return Grads{scale(div(g, sqrt(x)), 0.5)}; }, true);
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  return make_result(
      "clamp", x.shape(),
      map_unary(x, [lo, hi](double v) { return std::clamp(v, lo, hi); }), {x},
      [x, lo, hi](const Tensor& g) {
        Tensor mask = constant_like(x, map_unary(x, [lo, hi](double v) {
                                      return (v >= lo && v <= hi) ? 1.0 : 0.0;
                                    }));
        return Grads{mul(g, mask)};
      },
      true);
}

// ---------------------------------------------------------------- shape

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_str(x.shape()) +
                         " as " + shape_str(shape));
  }
  const Shape original = x.shape();
  std::vector<double> data(x.data().begin(), x.data().end());
  return make_result("reshape", std::move(shape), std::move(data), {x},
                     [original](const Tensor& g) {
                       return Grads{reshape(g, original)};
                     },
                     true);
}

Tensor transpose(const Tensor& x) {
  require_rank(x, 2, "transpose");
  const std::size_t m = x.dim(0), n = x.dim(1);
  const auto xs = x.data();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = xs[i * n + j];
  return make_result("transpose", {n, m}, std::move(out), {x},
                     [](const Tensor& g) { return Grads{transpose(g)}; }, true);
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw DegenerateInputError("concat: no inputs");
  Shape out_shape = parts[0].shape();
  if (axis >= out_shape.size()) {
    throw DimensionError("concat: axis out of range for " + shape_str(out_shape));
  }
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    Shape s = p.shape();
    if (s.size() != out_shape.size()) {
      throw DimensionError("concat: rank mismatch " + shape_str(s) + " vs " +
                           shape_str(out_shape));
    }
    total += s[axis];
    s[axis] = out_shape[axis];
    if (s != out_shape) {
      throw DimensionError("concat: incompatible shapes " +
                           shape_str(p.shape()) + " and " +
                           shape_str(parts[0].shape()));
    }
  }
  out_shape[axis] = total;
  const AxisLayout l = axis_layout(out_shape, axis, "concat");
  std::vector<double> out(shape_numel(out_shape));
  std::size_t offset = 0;
  std::vector<std::size_t> extents;
  for (const Tensor& p : parts) {
    const std::size_t ni = p.dim(axis);
    extents.push_back(ni);
    const auto ps = p.data();
    for (std::size_t o = 0; o < l.outer; ++o) {
      std::copy_n(ps.begin() + o * ni * l.inner, ni * l.inner,
                  out.begin() + (o * l.n + offset) * l.inner);
    }
    offset += ni;
  }
  return make_result("concat", out_shape, std::move(out), parts,
                     [axis, extents](const Tensor& g) {
                       Grads r;
                       std::size_t begin = 0;
                       for (std::size_t e : extents) {
                         r.push_back(slice(g, axis, begin, begin + e));
                         begin += e;
                       }
                       return r;
                     },
                     true);
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin,
             std::size_t end) {
  const AxisLayout l = axis_layout(x.shape(), axis, "slice");
  if (begin >= end || end > l.n) {
    throw DimensionError("slice: range [" + std::to_string(begin) + "," +
                         std::to_string(end) + ") invalid for " +
                         shape_str(x.shape()));
  }
  Shape out_shape = x.shape();
  out_shape[axis] = end - begin;
  const std::size_t w = end - begin;
  const auto xs = x.data();
  std::vector<double> out(l.outer * w * l.inner);
  for (std::size_t o = 0; o < l.outer; ++o) {
    std::copy_n(xs.begin() + (o * l.n + begin) * l.inner, w * l.inner,
                out.begin() + o * w * l.inner);
  }
  const std::size_t before = begin, after = l.n - end;
  return make_result("slice", out_shape, std::move(out), {x},
                     [axis, before, after](const Tensor& g) {
                       return Grads{pad(g, axis, before, after)};
                     },
                     true);
}

Tensor pad(const Tensor& x, std::size_t axis, std::size_t before,
           std::size_t after) {
  const AxisLayout l = axis_layout(x.shape(), axis, "pad");
  Shape out_shape = x.shape();
  const std::size_t n_out = l.n + before + after;
  out_shape[axis] = n_out;
  const auto xs = x.data();
  std::vector<double> out(l.outer * n_out * l.inner, 0.0);
  for (std::size_t o = 0; o < l.outer; ++o) {
    std::copy_n(xs.begin() + o * l.n * l.inner, l.n * l.inner,
                out.begin() + (o * n_out + before) * l.inner);
  }
  const std::size_t n = l.n;
  return make_result("pad", out_shape, std::move(out), {x},
                     [axis, before, n](const Tensor& g) {
                       return Grads{slice(g, axis, before, before + n)};
                     },
                     true);
}

Tensor broadcast_to(const Tensor& x, const Shape& shape) {
  const auto index = broadcast_index(x.shape(), shape, "broadcast_to");
  const auto xs = x.data();
  std::vector<double> out(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) out[i] = xs[index[i]];
  const Shape src = x.shape();
  return make_result("broadcast_to", shape, std::move(out), {x},
                     [src](const Tensor& g) { return Grads{reduce_to(g, src)}; },
                     true);
}

Tensor reduce_to(const Tensor& x, const Shape& shape) {
  const auto index = broadcast_index(shape, x.shape(), "reduce_to");
  const auto xs = x.data();
  std::vector<double> out(shape_numel(shape), 0.0);
  for (std::size_t i = 0; i < index.size(); ++i) out[index[i]] += xs[i];
  const Shape big = x.shape();
  return make_result("reduce_to", shape, std::move(out), {x},
                     [big](const Tensor& g) { return Grads{broadcast_to(g, big)}; },
                     true);
}

// ---------------------------------------------------------------- reductions

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  const Shape src = x.shape();
  return make_result("sum", {}, {acc}, {x},
                     [src](const Tensor& g) { return Grads{broadcast_to(g, src)}; },
                     true);
}

Tensor mean(const Tensor& x) {
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor sum_axis(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw DimensionError("sum_axis: axis out of range for " + shape_str(x.shape()));
  }
  Shape s = x.shape();
  s[axis] = 1;
  return reduce_to(x, s);
}

Tensor l2_norm(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v * v;
  const double norm = std::sqrt(acc);
  return make_result(
      "l2_norm", {}, {norm}, {x},
      [x, norm](const Tensor& g) {
        if (norm == 0.0) return Grads{Tensor::zeros(x.shape())};
        // Recomputed so the result stays differentiable in x.
        return Grads{mul_scalar(x, div(g, l2_norm(x)))};
      },
      true);
}

Tensor l1_norm(const Tensor& x) { return sum(abs(x)); }

// ---------------------------------------------------------------- matmul

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw DimensionError("matmul: expected rank-2 operands, got " +
                         shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  const std::size_t m = trans_a ? a.dim(1) : a.dim(0);
  const std::size_t k = trans_a ? a.dim(0) : a.dim(1);
  const std::size_t kb = trans_b ? b.dim(1) : b.dim(0);
  const std::size_t n = trans_b ? b.dim(0) : b.dim(1);
  if (k != kb) {
    throw DimensionError("matmul: inner dimensions disagree for " +
                         shape_str(a.shape()) + (trans_a ? "^T" : "") + " x " +
                         shape_str(b.shape()) + (trans_b ? "^T" : ""));
  }
  const double* A = a.data().data();
  const double* B = b.data().data();
  std::vector<double> out(m * n, 0.0);
  double* C = out.data();
  if (!trans_a && !trans_b) {
    for (std::size_t i = 0; i < m; ++i) {
      double* crow = C + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = A[i * k + p];
        if (av == 0.0) continue;
        const double* brow = B + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  } else if (!trans_a && trans_b) {
    for (std::size_t i = 0; i < m; ++i) {
      const double* arow = A + i * k;
      for (std::size_t j = 0; j < n; ++j) {
        const double* brow = B + j * k;
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
        C[i * n + j] = acc;
      }
    }
  } else if (trans_a && !trans_b) {
    for (std::size_t p = 0; p < k; ++p) {
      const double* arow = A + p * m;
      const double* brow = B + p * n;
      for (std::size_t i = 0; i < m; ++i) {
        const double av = arow[i];
        if (av == 0.0) continue;
        double* crow = C + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += A[p * m + i] * B[j * k + p];
        C[i * n + j] = acc;
      }
  }
  return make_result(
      "matmul", {m, n}, std::move(out), {a, b},
      [a, b, trans_a, trans_b](const Tensor& g) {
        Grads r(2);
        const bool ga = a.requires_grad(), gb = b.requires_grad();
        if (!trans_a && !trans_b) {
          if (ga) r[0] = matmul(g, b, false, true);
          if (gb) r[1] = matmul(a, g, true, false);
        } else if (trans_a && !trans_b) {
          if (ga) r[0] = matmul(b, g, false, true);
          if (gb) r[1] = matmul(a, g, false, false);
        } else if (!trans_a && trans_b) {
          if (ga) r[0] = matmul(g, b, false, false);
          if (gb) r[1] = matmul(g, a, true, false);
        } else {
          if (ga) r[0] = matmul(b, g, true, true);
          if (gb) r[1] = matmul(g, a, true, true);
        }
        return r;
      },
      true);
}

Tensor add_bias(const Tensor& x, const Tensor& b) {
  require_rank(x, 2, "add_bias");
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (b.numel() != n || b.rank() != 1) {
    throw DimensionError("add_bias: bias " + shape_str(b.shape()) +
                         " does not fit rows of " + shape_str(x.shape()));
  }
  const auto xs = x.data();
  const auto bs = b.data();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xs[i * n + j] + bs[j];
  return make_result("add_bias", x.shape(), std::move(out), {x, b},
                     [n, b](const Tensor& g) {
                       Grads r(2);
                       r[0] = g;
                       if (b.requires_grad()) {
                         r[1] = reshape(reduce_to(g, {1, n}), {n});
                       }
                       return r;
                     },
                     true);
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  const AxisLayout l = axis_layout(x.shape(), axis, "softmax");
  const auto xs = x.data();
  std::vector<double> out(xs.size());
  for (std::size_t o = 0; o < l.outer; ++o) {
    for (std::size_t in = 0; in < l.inner; ++in) {
      const std::size_t base = o * l.n * l.inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < l.n; ++i) mx = std::max(mx, xs[base + i * l.inner]);
      double z = 0.0;
      for (std::size_t i = 0; i < l.n; ++i) {
        const double e = std::exp(xs[base + i * l.inner] - mx);
        out[base + i * l.inner] = e;
        z += e;
      }
      for (std::size_t i = 0; i < l.n; ++i) out[base + i * l.inner] /= z;
    }
  }
  return make_result(
      "softmax", x.shape(), std::move(out), {x},
      [x, axis](const Tensor& g) {
        Tensor y = softmax(x, axis);
        Tensor gy = sum_axis(mul(g, y), axis);
        return Grads{mul(y, sub(g, broadcast_to(gy, x.shape())))};
      },
      true);
}

Tensor normalize_l1(const Tensor& x, std::size_t axis, double eps) {
  Tensor denom = add_scalar(sum_axis(abs(x), axis), eps);
  return div(x, broadcast_to(denom, x.shape()));
}

Tensor mul_scalar(const Tensor& x, const Tensor& s) {
  if (s.numel() != 1) {
    throw DimensionError("mul_scalar: expected a single-element factor, got " +
                         shape_str(s.shape()));
  }
  return mul(x, broadcast_to(s, x.shape()));
}

// ---------------------------------------------------------------- point sets

Tensor max_pool_points(const Tensor& f) {
  if (!f.defined()) throw DegenerateInputError("max_pool_points: no points");
  require_rank(f, 2, "max_pool_points");
  const std::size_t n = f.dim(0), d = f.dim(1);
  if (n == 0) throw DegenerateInputError("max_pool_points: no points");
  const auto fs = f.data();
  std::vector<double> out(fs.begin(), fs.begin() + d);
  std::vector<std::size_t> arg(d, 0);
  for (std::size_t i = 1; i < n; ++i) {
    const double* row = fs.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) {
      if (row[j] > out[j]) {
        out[j] = row[j];
        arg[j] = i;
      }
    }
  }
  const Shape in_shape = f.shape();
  return make_result(
      "max_pool_points", {d}, std::move(out), {f},
      [in_shape, arg, d](const Tensor& g) {
        std::vector<double> gi(shape_numel(in_shape), 0.0);
        const auto gs = g.data();
        for (std::size_t j = 0; j < d; ++j) gi[arg[j] * d + j] += gs[j];
        return Grads{Tensor::from_data(in_shape, std::move(gi))};
      },
      false);
}

Tensor group_max(const Tensor& f, std::size_t group) {
  require_rank(f, 2, "group_max");
  if (group == 0 || f.dim(0) % group != 0) {
    throw DimensionError("group_max: " + std::to_string(f.dim(0)) +
                         " rows do not split into groups of " +
                         std::to_string(group));
  }
  const std::size_t m = f.dim(0) / group, d = f.dim(1);
  const auto fs = f.data();
  std::vector<double> out(m * d);
  std::vector<std::size_t> arg(m * d);
  for (std::size_t gi = 0; gi < m; ++gi) {
    for (std::size_t j = 0; j < d; ++j) {
      std::size_t best = gi * group;
      double bv = fs[best * d + j];
      for (std::size_t r = 1; r < group; ++r) {
        const std::size_t row = gi * group + r;
        if (fs[row * d + j] > bv) {
          bv = fs[row * d + j];
          best = row;
        }
      }
      out[gi * d + j] = bv;
      arg[gi * d + j] = best;
    }
  }
  const Shape in_shape = f.shape();
  return make_result(
      "group_max", {m, d}, std::move(out), {f},
      [in_shape, arg, m, d](const Tensor& g) {
        std::vector<double> gi(shape_numel(in_shape), 0.0);
        const auto gs = g.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < d; ++j)
            gi[arg[i * d + j] * d + j] += gs[i * d + j];
        return Grads{Tensor::from_data(in_shape, std::move(gi))};
      },
      false);
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  require_rank(x, 2, "gather_rows");
  if (rows.empty()) throw DegenerateInputError("gather_rows: no rows requested");
  const std::size_t n = x.dim(0), d = x.dim(1);
  const auto xs = x.data();
  std::vector<double> out(rows.size() * d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= n) {
      throw ContractError("gather_rows: index " + std::to_string(rows[i]) +
                          " out of range for " + std::to_string(n) + " rows");
    }
    std::copy_n(xs.begin() + rows[i] * d, d, out.begin() + i * d);
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  const Shape in_shape = x.shape();
  return make_result(
      "gather_rows", {rows.size(), d}, std::move(out), {x},
      [in_shape, idx, d](const Tensor& g) {
        std::vector<double> gi(shape_numel(in_shape), 0.0);
        const auto gs = g.data();
        for (std::size_t i = 0; i < idx.size(); ++i)
          for (std::size_t j = 0; j < d; ++j) gi[idx[i] * d + j] += gs[i * d + j];
        return Grads{Tensor::from_data(in_shape, std::move(gi))};
      },
      false);
}

Tensor repeat_rows(const Tensor& x, std::size_t times) {
  require_rank(x, 2, "repeat_rows");
  const std::size_t n = x.dim(0), d = x.dim(1);
  const auto xs = x.data();
  std::vector<double> out(n * times * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t s = 0; s < times; ++s)
      std::copy_n(xs.begin() + i * d, d, out.begin() + (i * times + s) * d);
  return make_result(
      "repeat_rows", {n * times, d}, std::move(out), {x},
      [n, d, times](const Tensor& g) {
        std::vector<double> gi(n * d, 0.0);
        const auto gs = g.data();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t s = 0; s < times; ++s)
            for (std::size_t j = 0; j < d; ++j)
              gi[i * d + j] += gs[(i * times + s) * d + j];
        return Grads{Tensor::from_data({n, d}, std::move(gi))};
      },
      false);
}

Tensor tile_rows(const Tensor& x, std::size_t times) {
  require_rank(x, 2, "tile_rows");
  const std::size_t n = x.dim(0), d = x.dim(1);
  const auto xs = x.data();
  std::vector<double> out(n * times * d);
  for (std::size_t s = 0; s < times; ++s)
    std::copy(xs.begin(), xs.end(), out.begin() + s * n * d);
  return make_result(
      "tile_rows", {n * times, d}, std::move(out), {x},
      [n, d, times](const Tensor& g) {
        std::vector<double> gi(n * d, 0.0);
        const auto gs = g.data();
        for (std::size_t s = 0; s < times; ++s)
          for (std::size_t k = 0; k < n * d; ++k) gi[k] += gs[s * n * d + k];
        return Grads{Tensor::from_data({n, d}, std::move(gi))};
      },
      false);
}

Tensor row_norms(const Tensor& x) {
  require_rank(x, 2, "row_norms");
  const std::size_t n = x.dim(0), d = x.dim(1);
  const auto xs = x.data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) acc += xs[i * d + j] * xs[i * d + j];
    out[i] = std::sqrt(acc);
  }
  std::vector<double> norms = out;
  return make_result(
      "row_norms", {n}, std::move(out), {x},
      [x, norms, n, d](const Tensor& g) {
        std::vector<double> gi(n * d, 0.0);
        const auto gs = g.data();
        const auto xs2 = x.data();
        for (std::size_t i = 0; i < n; ++i) {
          if (norms[i] == 0.0) continue;
          const double f = gs[i] / norms[i];
          for (std::size_t j = 0; j < d; ++j) gi[i * d + j] = f * xs2[i * d + j];
        }
        return Grads{Tensor::from_data({n, d}, std::move(gi))};
      },
      false);
}

}  // namespace fewpoint

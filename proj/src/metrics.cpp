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

#include "fewpoint/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "fewpoint/errors.hpp"
#include "fewpoint/ops.hpp"

namespace fewpoint {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// For every row of a ([n,3] flat), index of the nearest row of b and the
// squared distance to it. Ties resolve to the lowest index.
void nearest(const double* a, std::size_t n, const double* b, std::size_t m,
             std::vector<std::size_t>& idx, std::vector<double>& d2) {
  idx.assign(n, 0);
  d2.assign(n, kInf);
  for (std::size_t i = 0; i < n; ++i) {
    const double ax = a[3 * i], ay = a[3 * i + 1], az = a[3 * i + 2];
    double best = kInf;
    std::size_t bi = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const double dx = ax - b[3 * j], dy = ay - b[3 * j + 1], dz = az - b[3 * j + 2];
      const double d = dx * dx + dy * dy + dz * dz;
      if (d < best) {
        best = d;
        bi = j;
      }
    }
    idx[i] = bi;
    d2[i] = best;
  }
}

std::vector<double> flatten(const PointCloud& c) {
  std::vector<double> out;
  out.reserve(c.size() * 3);
  for (const Vec3& p : c.points()) out.insert(out.end(), p.begin(), p.end());
  return out;
}

// One direction of the chamfer sum, accumulated in index order.
double directed_mean(const std::vector<double>& d2, bool squared) {
  double acc = 0.0;
  for (double d : d2) acc += squared ? d : std::sqrt(d);
  return acc / static_cast<double>(d2.size());
}

void require_points(const Tensor& t, const char* op) {
  if (t.rank() != 2 || t.dim(1) != 3) {
    throw DimensionError(std::string(op) + ": expected [n,3], got " +
                         shape_str(t.shape()));
  }
}

}  // namespace

double chamfer(const PointCloud& s1, const PointCloud& s2, bool squared) {
  if (s1.empty() || s2.empty()) throw DegenerateInputError("chamfer: empty set");
  const auto a = flatten(s1), b = flatten(s2);
  std::vector<std::size_t> i12, i21;
  std::vector<double> d12, d21;
  nearest(a.data(), s1.size(), b.data(), s2.size(), i12, d12);
  nearest(b.data(), s2.size(), a.data(), s1.size(), i21, d21);
  // Summing both directed terms in a fixed order keeps CD(a,b) == CD(b,a)
  // bit for bit.
  const double t1 = directed_mean(d12, squared);
  const double t2 = directed_mean(d21, squared);
  return t1 <= t2 ? t1 + t2 : t2 + t1;
}

Tensor chamfer_loss(const Tensor& s1, const Tensor& s2, bool squared) {
  require_points(s1, "chamfer_loss");
  require_points(s2, "chamfer_loss");
  const std::size_t n = s1.dim(0), m = s2.dim(0);
  const double* a = s1.data().data();
  const double* b = s2.data().data();
  std::vector<std::size_t> i12, i21;
  std::vector<double> d12, d21;
  nearest(a, n, b, m, i12, d12);
  nearest(b, m, a, n, i21, d21);
  const double t1 = directed_mean(d12, squared);
  const double t2 = directed_mean(d21, squared);
  const double value = t1 <= t2 ? t1 + t2 : t2 + t1;
  return make_result(
      "chamfer", {}, {value}, {s1, s2},
      [s1, s2, n, m, i12, i21, d12, d21, squared](const Tensor& g) {
        const double gv = g.item();
        const double* a2 = s1.data().data();
        const double* b2 = s2.data().data();
        std::vector<double> ga(n * 3, 0.0), gb(m * 3, 0.0);
        // d/dx of ||x - y|| is (x - y)/||x - y||; of ||x - y||^2 it is 2(x - y).
        auto accumulate = [&](const double* from, const double* to,
                              std::size_t count, const std::vector<std::size_t>& nn,
                              const std::vector<double>& dist2, std::vector<double>& gfrom,
                              std::vector<double>& gto) {
          const double w = gv / static_cast<double>(count);
          for (std::size_t i = 0; i < count; ++i) {
            double f;
            if (squared) {
              f = 2.0 * w;
            } else {
              if (dist2[i] == 0.0) continue;
              f = w / std::sqrt(dist2[i]);
            }
            const std::size_t j = nn[i];
            for (int k = 0; k < 3; ++k) {
              const double diff = from[3 * i + k] - to[3 * j + k];
              gfrom[3 * i + k] += f * diff;
              gto[3 * j + k] -= f * diff;
            }
          }
        };
        accumulate(a2, b2, n, i12, d12, ga, gb);
        accumulate(b2, a2, m, i21, d21, gb, ga);
        return std::vector<Tensor>{Tensor::from_data({n, 3}, std::move(ga)),
                                   Tensor::from_data({m, 3}, std::move(gb))};
      },
      false);
}

CostMatrix euclidean_costs(const PointCloud& s1, const PointCloud& s2) {
  if (s1.size() != s2.size()) {
    throw ContractError("EMD needs equal sizes, got " + std::to_string(s1.size()) +
                        " and " + std::to_string(s2.size()));
  }
  if (s1.empty()) throw DegenerateInputError("EMD: empty sets");
  CostMatrix c;
  c.n = s1.size();
  c.values.resize(c.n * c.n);
  for (std::size_t i = 0; i < c.n; ++i)
    for (std::size_t j = 0; j < c.n; ++j) c.values[i * c.n + j] = distance(s1[i], s2[j]);
  return c;
}

std::vector<std::size_t> solve_assignment_exact(const CostMatrix& costs,
                                                double* total_cost) {
  const std::size_t n = costs.n;
  // 1-based shortest augmenting path formulation; column 0 is a sentinel.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = costs(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> perm(n, 0);
  for (std::size_t j = 1; j <= n; ++j) perm[p[j] - 1] = j - 1;
  if (total_cost) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += costs(i, perm[i]);
    *total_cost = acc;
  }
  return perm;
}

std::vector<std::size_t> solve_assignment_auction(const CostMatrix& costs,
                                                  double rel_epsilon,
                                                  double* total_cost,
                                                  AuctionStats* stats,
                                                  std::size_t max_bids) {
  if (!(rel_epsilon > 0.0)) throw ContractError("auction: epsilon must be positive");
  const std::size_t n = costs.n;
  if (n == 0) throw DegenerateInputError("auction: empty cost matrix");
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  double max_cost = 0.0;
  for (double c : costs.values) max_cost = std::max(max_cost, c);

  // Benefits are negated costs; prices live on the columns.
  std::vector<double> price(n, 0.0);
  std::vector<std::size_t> owner(n, kNone), assigned(n, kNone);
  AuctionStats local;
  double eps = max_cost > 0.0 ? max_cost / 4.0 : 1.0;
  const double eps_floor = std::max(max_cost, 1.0) * 1e-14;

  double cost_sum = 0.0;
  while (true) {
    std::fill(owner.begin(), owner.end(), kNone);
    std::fill(assigned.begin(), assigned.end(), kNone);
    std::deque<std::size_t> queue(n);
    std::iota(queue.begin(), queue.end(), std::size_t{0});
    ++local.phases;
    while (!queue.empty()) {
      const std::size_t i = queue.front();
      queue.pop_front();
      double best = -kInf, second = -kInf;
      std::size_t best_j = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const double value = -costs(i, j) - price[j];
        if (value > best) {
          second = best;
          best = value;
          best_j = j;
        } else if (value > second) {
          second = value;
        }
      }
      const double increment = (n == 1 ? 0.0 : best - second) + eps;
      price[best_j] += increment;
      if (owner[best_j] != kNone) {
        assigned[owner[best_j]] = kNone;
        queue.push_back(owner[best_j]);
      }
      owner[best_j] = i;
      assigned[i] = best_j;
      if (++local.bids > max_bids) {
        throw ConvergenceError("auction: no convergence within " +
                               std::to_string(max_bids) + " bids");
      }
    }
    cost_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) cost_sum += costs(i, assigned[i]);
    // Weak duality: for any prices, sum_i max_j(b_ij - p_j) + sum_j p_j bounds
    // the optimal total benefit from above, i.e. the optimal cost from below.
    double dual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = -kInf;
      for (std::size_t j = 0; j < n; ++j) best = std::max(best, -costs(i, j) - price[j]);
      dual += best;
    }
    for (double p : price) dual += p;
    local.lower_bound = std::max(0.0, -dual);
    if (cost_sum == 0.0 || cost_sum <= (1.0 + rel_epsilon) * local.lower_bound) break;
    if (eps <= eps_floor) {
      throw ConvergenceError("auction: epsilon floor reached without certifying the bound");
    }
    eps = std::max(eps / 5.0, eps_floor);
  }
  if (total_cost) *total_cost = cost_sum;
  if (stats) *stats = local;
  return assigned;
}

Assignment emd_exact(const PointCloud& s1, const PointCloud& s2, std::size_t limit) {
  if (s1.size() != s2.size()) {
    throw ContractError("emd_exact: sizes " + std::to_string(s1.size()) + " and " +
                        std::to_string(s2.size()) + " differ");
  }
  if (s1.size() > limit) {
    throw ContractError("emd_exact: " + std::to_string(s1.size()) +
                        " points exceed the exact limit " + std::to_string(limit) +
                        "; use emd_auction");
  }
  const CostMatrix c = euclidean_costs(s1, s2);
  double total = 0.0;
  Assignment a;
  a.permutation = solve_assignment_exact(c, &total);
  a.cost = total / static_cast<double>(c.n);
  return a;
}

Assignment emd_auction(const PointCloud& s1, const PointCloud& s2, double epsilon) {
  const CostMatrix c = euclidean_costs(s1, s2);
  double total = 0.0;
  Assignment a;
  a.permutation = solve_assignment_auction(c, epsilon, &total);
  a.cost = total / static_cast<double>(c.n);
  return a;
}

Tensor emd_loss(const Tensor& s1, const Tensor& s2, const Assignment& matching) {
  require_points(s1, "emd_loss");
  require_points(s2, "emd_loss");
  if (s1.dim(0) != s2.dim(0) || matching.permutation.size() != s1.dim(0)) {
    throw ContractError("emd_loss: sizes and matching disagree");
  }
  return mean(row_norms(sub(s1, gather_rows(s2, matching.permutation))));
}

std::vector<std::vector<std::size_t>> knn(const PointCloud& centers,
                                          const PointCloud& cloud, std::size_t k) {
  if (cloud.empty()) throw DegenerateInputError("knn: empty cloud");
  if (k == 0 || k > cloud.size()) {
    throw ContractError("knn: k=" + std::to_string(k) + " not in [1, " +
                        std::to_string(cloud.size()) + "]");
  }
  std::vector<std::vector<std::size_t>> out(centers.size());
  std::vector<std::size_t> order(cloud.size());
  std::vector<double> d(cloud.size());
  for (std::size_t c = 0; c < centers.size(); ++c) {
    for (std::size_t j = 0; j < cloud.size(); ++j) d[j] = squared_distance(centers[c], cloud[j]);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                      order.end(), [&](std::size_t a, std::size_t b) {
                        return d[a] < d[b] || (d[a] == d[b] && a < b);
                      });
    out[c].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return out;
}

std::vector<std::vector<std::size_t>> ball_query(const PointCloud& centers,
                                                 const PointCloud& cloud,
                                                 std::size_t k, double radius) {
  if (cloud.empty()) throw DegenerateInputError("ball_query: empty cloud");
  if (k == 0) throw ContractError("ball_query: k must be >= 1");
  if (!(radius > 0.0)) throw ContractError("ball_query: radius must be positive");
  const double r2 = radius * radius;
  std::vector<std::vector<std::size_t>> out(centers.size());
  std::vector<std::pair<double, std::size_t>> hits;
  for (std::size_t c = 0; c < centers.size(); ++c) {
    hits.clear();
    double best = kInf;
    std::size_t nearest_idx = 0;
    for (std::size_t j = 0; j < cloud.size(); ++j) {
      const double d = squared_distance(centers[c], cloud[j]);
      if (d < best) {
        best = d;
        nearest_idx = j;
      }
      if (d <= r2) hits.emplace_back(d, j);
    }
    std::sort(hits.begin(), hits.end());
    auto& group = out[c];
    for (std::size_t h = 0; h < hits.size() && group.size() < k; ++h) {
      group.push_back(hits[h].second);
    }
    while (group.size() < k) group.push_back(nearest_idx);
  }
  return out;
}

double reduction_rate(double baseline, double ours) {
  if (!(baseline > 0.0)) {
    throw ContractError("reduction_rate: baseline must be positive, got " +
                        std::to_string(baseline));
  }
  return (baseline - ours) / baseline;
}

}  // namespace fewpoint

// Copyright 2026 The hodep Authors
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

// Exact engines for small instances. Everything here enumerates; nothing
// shares code with the ADMM or Chu-Liu/Edmonds paths it is used to check.
//
//   p(y) = (1/Z) prod_m F_m(y_scope(m))     over binary variables y
//
// Loopy belief propagation (sum-product, synchronous, damped) lives here as
// well: it is exact on trees and serves as an approximate cross-check.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hodep/common.hpp"
#include "hodep/factor_graph.hpp"
#include "hodep/scorer.hpp"
#include "hodep/tree.hpp"

namespace hodep {

struct DiscreteFactor {
  std::vector<int> scope;
  // table[idx] with bit k of idx = state of scope[k]; strictly positive.
  std::vector<double> table;

  double value(std::span<const int> assignment) const {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < scope.size(); ++k)
      if (assignment[scope[k]]) idx |= std::size_t{1} << k;
    return table[idx];
  }
};

class DiscreteFactorGraph {
 public:
  explicit DiscreteFactorGraph(int variables = 0) : variables_(variables) {}

  int variable_count() const { return variables_; }
  const std::vector<DiscreteFactor>& factors() const { return factors_; }

  int add_factor(std::vector<int> scope, std::vector<double> table) {
    if (table.size() != (std::size_t{1} << scope.size()))
      throw ValidationError("factor table size does not match scope");
    for (int v : scope)
      if (v < 0 || v >= variables_) throw ValidationError("factor scope outside variable set");
    for (double t : table)
      if (!(t > 0.0) || !std::isfinite(t)) throw ValidationError("factor potentials must be positive and finite");
    factors_.push_back({std::move(scope), std::move(table)});
    return static_cast<int>(factors_.size()) - 1;
  }

  // Unary factor per arc with table (1, psi_k) and, if requested, one pairwise
  // factor per slave with table psi_k [y_k] + psi_k' [y_k'] + 1.
  static DiscreteFactorGraph from_parser_graph(const PotentialTable& psi, const FactorGraph& graph,
                                               bool include_pairwise = true) {
    DiscreteFactorGraph g(static_cast<int>(graph.arcs().size()));
    for (std::size_t r = 0; r < graph.arcs().size(); ++r)
      g.add_factor({static_cast<int>(r)}, {1.0, psi.unary(graph.arcs()[r])});
    if (include_pairwise) {
      for (const Slave& s : graph.slaves()) {
        const double a = psi.unary(s.arcs[0]);
        const double b = psi.unary(s.arcs[1]);
        g.add_factor({s.arc_index[0], s.arc_index[1]}, {1.0, a + 1.0, b + 1.0, a + b + 1.0});
      }
    }
    return g;
  }

  // Adjacency: factors touching each variable.
  std::vector<std::vector<int>> variable_neighbors() const {
    std::vector<std::vector<int>> nb(variables_);
    for (std::size_t f = 0; f < factors_.size(); ++f)
      for (int v : factors_[f].scope) nb[v].push_back(static_cast<int>(f));
    return nb;
  }

 private:
  int variables_;
  std::vector<DiscreteFactor> factors_;
};

struct ExactResult {
  double log_z = 0.0;
  std::vector<double> marginals;  // p(y_i = 1)
  std::vector<int> map_assignment;
  double map_log_score = 0.0;  // log prod_m F_m at the MAP assignment
};

inline constexpr int kBruteForceCap = 20;

inline ExactResult brute_force(const DiscreteFactorGraph& graph) {
  const int V = graph.variable_count();
  if (V > kBruteForceCap)
    throw ValidationError("brute_force: " + std::to_string(V) + " variables exceeds cap of " +
                          std::to_string(kBruteForceCap));
  const std::uint64_t states = std::uint64_t{1} << V;
  std::vector<double> log_scores(states);
  std::vector<int> y(V);
  ExactResult out;
  out.map_log_score = -std::numeric_limits<double>::infinity();
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::uint64_t a = 0; a < states; ++a) {
    for (int v = 0; v < V; ++v) y[v] = static_cast<int>((a >> v) & 1u);
    double ls = 0.0;
    for (const auto& f : graph.factors()) ls += std::log(f.value(y));
    log_scores[a] = ls;
    if (ls > out.map_log_score) {
      out.map_log_score = ls;
      out.map_assignment = y;
    }
    max_log = std::max(max_log, ls);
  }
  double total = 0.0;
  std::vector<double> on(V, 0.0);
  for (std::uint64_t a = 0; a < states; ++a) {
    const double w = std::exp(log_scores[a] - max_log);
    total += w;
    for (int v = 0; v < V; ++v)
      if ((a >> v) & 1u) on[v] += w;
  }
  out.log_z = max_log + std::log(total);
  out.marginals.resize(V);
  for (int v = 0; v < V; ++v) out.marginals[v] = on[v] / total;
  return out;
}

struct LbpOptions {
  int max_rounds = 1000;
  double damping = 0.5;
  double tol = 1e-12;
};

struct LbpResult {
  std::vector<std::array<double, 2>> variable_beliefs;
  std::vector<std::vector<double>> factor_beliefs;
  int rounds = 0;
  bool converged = false;
  double last_change = 0.0;
  bool messages_positive = true;  // held after every round
};

// Synchronous damped sum-product with normalized messages.
//   m_{i->a}(y_i)  ∝ prod_{b in N(i)\a} m_{b->i}(y_i)
//   m_{a->i}(y_i)  ∝ sum_{y_a ~ y_i} psi_a(y_a) prod_{j in N(a)\i} m_{j->a}(y_j)
inline LbpResult lbp(const DiscreteFactorGraph& graph, const LbpOptions& options = {}) {
  using Msg = std::array<double, 2>;
  const auto& factors = graph.factors();
  const int V = graph.variable_count();
  const auto nb = graph.variable_neighbors();

  // Messages indexed [factor][slot in scope].
  std::vector<std::vector<Msg>> to_factor(factors.size()), to_var(factors.size());
  for (std::size_t f = 0; f < factors.size(); ++f) {
    to_factor[f].assign(factors[f].scope.size(), Msg{0.5, 0.5});
    to_var[f].assign(factors[f].scope.size(), Msg{0.5, 0.5});
  }
  // slot_of[v] lists (factor, slot) pairs.
  std::vector<std::vector<std::pair<int, int>>> slot_of(V);
  for (std::size_t f = 0; f < factors.size(); ++f)
    for (std::size_t k = 0; k < factors[f].scope.size(); ++k)
      slot_of[factors[f].scope[k]].emplace_back(static_cast<int>(f), static_cast<int>(k));

  auto normalize = [](Msg m) {
    const double s = m[0] + m[1];
    return Msg{m[0] / s, m[1] / s};
  };

  LbpResult out;
  for (int round = 1; round <= options.max_rounds; ++round) {
    auto new_to_factor = to_factor;
    auto new_to_var = to_var;
    double change = 0.0;

    for (int v = 0; v < V; ++v) {
      for (auto [f, k] : slot_of[v]) {
        Msg m{1.0, 1.0};
        for (auto [g, l] : slot_of[v]) {
          if (g == f) continue;
          m[0] *= to_var[g][l][0];
          m[1] *= to_var[g][l][1];
        }
        new_to_factor[f][k] = normalize(m);
      }
    }
    for (std::size_t f = 0; f < factors.size(); ++f) {
      const auto& fac = factors[f];
      const std::size_t arity = fac.scope.size();
      for (std::size_t k = 0; k < arity; ++k) {
        Msg m{0.0, 0.0};
        for (std::size_t idx = 0; idx < fac.table.size(); ++idx) {
          double w = fac.table[idx];
          for (std::size_t l = 0; l < arity; ++l) {
            if (l == k) continue;
            w *= to_factor[f][l][(idx >> l) & 1u];
          }
          m[(idx >> k) & 1u] += w;
        }
        new_to_var[f][k] = normalize(m);
      }
    }
    auto damp = [&](Msg& fresh, const Msg& old) {
      fresh = normalize(Msg{(1.0 - options.damping) * fresh[0] + options.damping * old[0],
                            (1.0 - options.damping) * fresh[1] + options.damping * old[1]});
      change = std::max({change, std::abs(fresh[0] - old[0]), std::abs(fresh[1] - old[1])});
      if (!(fresh[0] > 0.0 && fresh[1] > 0.0)) out.messages_positive = false;
    };
    for (std::size_t f = 0; f < factors.size(); ++f) {
      for (std::size_t k = 0; k < factors[f].scope.size(); ++k) {
        damp(new_to_factor[f][k], to_factor[f][k]);
        damp(new_to_var[f][k], to_var[f][k]);
      }
    }
    to_factor = std::move(new_to_factor);
    to_var = std::move(new_to_var);
    out.rounds = round;
    out.last_change = change;
    if (change < options.tol) {
      out.converged = true;
      break;
    }
  }

  out.variable_beliefs.resize(V);
  for (int v = 0; v < V; ++v) {
    Msg b{1.0, 1.0};
    for (auto [f, k] : slot_of[v]) {
      b[0] *= to_var[f][k][0];
      b[1] *= to_var[f][k][1];
    }
    out.variable_beliefs[v] = normalize(b);
  }
  out.factor_beliefs.resize(factors.size());
  for (std::size_t f = 0; f < factors.size(); ++f) {
    const auto& fac = factors[f];
    std::vector<double> b(fac.table.size());
    double total = 0.0;
    for (std::size_t idx = 0; idx < fac.table.size(); ++idx) {
      double w = fac.table[idx];
      for (std::size_t l = 0; l < fac.scope.size(); ++l) w *= to_factor[f][l][(idx >> l) & 1u];
      b[idx] = w;
      total += w;
    }
    for (double& x : b) x /= total;
    out.factor_beliefs[f] = std::move(b);
  }
  return out;
}

// Adds unary log-linear factors exp(theta_r y_r) to `base` and compares the
// central finite difference of log Z in each theta_r with the exact marginal
// p(y_r = 1). Returns the largest absolute deviation.
inline double check_logz_gradient(const DiscreteFactorGraph& base, std::span<const double> theta,
                                  double step = 1e-4) {
  const int V = base.variable_count();
  if (static_cast<int>(theta.size()) != V) throw ValidationError("check_logz_gradient: theta size mismatch");
  auto with_theta = [&](std::span<const double> t) {
    DiscreteFactorGraph g = base;
    for (int v = 0; v < V; ++v) g.add_factor({v}, {1.0, std::exp(t[v])});
    return g;
  };
  const ExactResult exact = brute_force(with_theta(theta));
  std::vector<double> t(theta.begin(), theta.end());
  double worst = 0.0;
  for (int v = 0; v < V; ++v) {
    t[v] = theta[v] + step;
    const double up = brute_force(with_theta(t)).log_z;
    t[v] = theta[v] - step;
    const double down = brute_force(with_theta(t)).log_z;
    t[v] = theta[v];
    worst = std::max(worst, std::abs((up - down) / (2.0 * step) - exact.marginals[v]));
  }
  return worst;
}

struct ConsistentMap {
  std::vector<int> assignment;  // aligned with FactorGraph::arcs()
  double value = -std::numeric_limits<double>::infinity();
};

// Exhaustive maximization of sum_s f_s(z_s) over binary arc assignments in
// which every slave copies the shared arc value.
inline ConsistentMap brute_force_consistent_map(const FactorGraph& graph) {
  const int R = static_cast<int>(graph.arcs().size());
  if (R > kBruteForceCap) throw ValidationError("brute_force_consistent_map: too many arcs");
  ConsistentMap best;
  std::vector<int> y(R);
  for (std::uint64_t a = 0; a < (std::uint64_t{1} << R); ++a) {
    for (int r = 0; r < R; ++r) y[r] = static_cast<int>((a >> r) & 1u);
    double v = 0.0;
    for (const Slave& s : graph.slaves())
      for (int k = 0; k < Slave::kArity; ++k) v += s.theta[k] * y[s.arc_index[k]];
    if (v > best.value) {
      best.value = v;
      best.assignment = y;
    }
  }
  return best;
}

struct Arborescence {
  std::vector<int> heads;
  double score = -std::numeric_limits<double>::infinity();
};

// Enumerates every head assignment and keeps the best one that is a tree.
inline Arborescence brute_force_arborescence(const Matrix& weights) {
  const int n = static_cast<int>(weights.cols());
  if (n > 8) throw ValidationError("brute_force_arborescence: n too large");
  Arborescence best;
  std::vector<int> heads(n, 0);
  for (;;) {
    if (is_tree(heads)) {
      double s = 0.0;
      for (int j = 1; j <= n; ++j) s += weights(heads[j - 1], j - 1);
      if (s > best.score) {
        best.score = s;
        best.heads = heads;
      }
    }
    int k = 0;
    while (k < n && ++heads[k] > n) heads[k++] = 0;
    if (k == n) break;
  }
  return best;
}

}  // namespace hodep

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

// Consensus ADMM for MAP inference over a FactorGraph.
//
// Each iteration t:
//   1. every slave maximizes
//        sum_r (theta_s(r) + lambda_s(r) + rho u(r)) z(r) - rho/2 sum_r z(r)^2
//      over its feasible set, reading only iteration-t values;
//   2. u(r) becomes the mean of z_s(r) over the delta(r) covering slaves;
//   3. lambda_s(r) -= eta_t (z_s(r) - u(r)),  eta_t = eta0 / sqrt(t + 1).
// Step 3 preserves sum_s lambda_s(r) = 0 because step 2 is an average.

#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "hodep/common.hpp"
#include "hodep/factor_graph.hpp"

namespace hodep {

enum class SlaveMode {
  kBox,      // z_s in [0,1]^2, closed-form clip
  kPattern,  // z_s in the convex hull of the slave's admissible patterns
};

struct AdmmConfig {
  double rho = 1.0;
  double eta0 = 1.0;
  double eps_primal = 1e-4;
  double eps_dual = 1e-4;
  int max_iters = 300;
  double rounding_threshold = 0.5;
  double integrality_tol = 1e-3;
  SlaveMode mode = SlaveMode::kBox;

  void validate() const {
    if (!(rho > 0.0)) throw ConfigError("admm: rho must be positive");
    if (!(eta0 > 0.0)) throw ConfigError("admm: eta0 must be positive");
    if (!(eps_primal > 0.0) || !(eps_dual > 0.0)) throw ConfigError("admm: residual thresholds must be positive");
    if (max_iters < 1) throw ConfigError("admm: max_iters must be >= 1");
    if (!(rounding_threshold > 0.0 && rounding_threshold < 1.0))
      throw ConfigError("admm: rounding_threshold must lie in (0,1)");
  }
};

using SlaveVector = std::array<double, Slave::kArity>;

struct AdmmState {
  std::vector<SlaveVector> z;
  std::vector<double> u;  // aligned with FactorGraph::arcs()
  std::vector<SlaveVector> lambda;
  int iter = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

struct MapResult {
  std::vector<ArcId> arcs;
  std::vector<double> u_relaxed;
  std::vector<int> u_rounded;
  bool integral = true;
  double objective = 0.0;
  int iterations = 0;
  bool converged = true;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

namespace detail {

inline double slave_objective(const SlaveVector& coeff, double rho, double z0, double z1) {
  return coeff[0] * z0 + coeff[1] * z1 - 0.5 * rho * (z0 * z0 + z1 * z1);
}

// Maximizes coeff.z - rho/2 |z|^2 over the convex hull of `corners` (2-D).
// The maximizer is the projection of coeff/rho onto the hull: either that
// point itself (if inside) or a point on one of the segments between two
// corners. Every candidate is feasible, so the best one is exact.
inline SlaveVector solve_over_hull(const SlaveVector& coeff, double rho, std::span<const Pattern> corners) {
  const double px = coeff[0] / rho, py = coeff[1] / rho;
  SlaveVector best{static_cast<double>(corners[0][0]), static_cast<double>(corners[0][1])};
  double best_value = slave_objective(coeff, rho, best[0], best[1]);
  auto consider = [&](double x, double y) {
    const double v = slave_objective(coeff, rho, x, y);
    if (v > best_value + 1e-15) {
      best_value = v;
      best = {x, y};
    }
  };
  for (std::size_t a = 0; a < corners.size(); ++a) {
    const double ax = corners[a][0], ay = corners[a][1];
    consider(ax, ay);
    for (std::size_t b = a + 1; b < corners.size(); ++b) {
      const double dx = corners[b][0] - ax, dy = corners[b][1] - ay;
      const double len2 = dx * dx + dy * dy;
      if (len2 == 0.0) continue;
      const double t = std::clamp(((px - ax) * dx + (py - ay) * dy) / len2, 0.0, 1.0);
      consider(ax + t * dx, ay + t * dy);
    }
  }
  // Interior candidate: inside iff it is on the same side of every hull edge.
  // Checking all corner pairs is enough for at most four points.
  bool inside = corners.size() >= 3;
  int hull_edges = 0;
  if (inside) {
    for (std::size_t a = 0; a < corners.size() && inside; ++a) {
      for (std::size_t b = 0; b < corners.size() && inside; ++b) {
        if (a == b) continue;
        const double ex = corners[b][0] - corners[a][0], ey = corners[b][1] - corners[a][1];
        bool is_edge = true;
        int side = 0;
        for (std::size_t c = 0; c < corners.size(); ++c) {
          const double cross = ex * (corners[c][1] - corners[a][1]) - ey * (corners[c][0] - corners[a][0]);
          const int sgn = cross > 1e-12 ? 1 : (cross < -1e-12 ? -1 : 0);
          if (sgn == 0) continue;
          if (side == 0) side = sgn;
          else if (sgn != side) { is_edge = false; break; }
        }
        if (!is_edge || side == 0) continue;
        ++hull_edges;
        const double cross = ex * (py - corners[a][1]) - ey * (px - corners[a][0]);
        if (cross * side < -1e-12) inside = false;
      }
    }
  }
  if (inside && hull_edges >= 3) consider(px, py);
  return best;
}

}  // namespace detail

// Slave update. In box mode the objective separates per coordinate and the
// optimum is clip((theta + lambda + rho u) / rho, 0, 1).
inline SlaveVector solve_slave(const Slave& slave, const SlaveVector& lambda_s, const SlaveVector& u_prev,
                               double rho, SlaveMode mode = SlaveMode::kBox) {
  if (!(rho > 0.0)) throw ConfigError("admm: rho must be positive");
  SlaveVector coeff;
  for (int k = 0; k < Slave::kArity; ++k) coeff[k] = slave.theta[k] + lambda_s[k] + rho * u_prev[k];
  if (mode == SlaveMode::kBox || slave.admissible.empty()) {
    SlaveVector z;
    for (int k = 0; k < Slave::kArity; ++k) z[k] = std::clamp(coeff[k] / rho, 0.0, 1.0);
    return z;
  }
  return detail::solve_over_hull(coeff, rho, slave.admissible);
}

inline std::vector<double> update_u(const FactorGraph& graph, const std::vector<SlaveVector>& z) {
  std::vector<double> u(graph.arcs().size(), 0.0);
  const auto& slaves = graph.slaves();
  for (std::size_t s = 0; s < slaves.size(); ++s)
    for (int k = 0; k < Slave::kArity; ++k) u[slaves[s].arc_index[k]] += z[s][k];
  const auto& delta = graph.deltas();
  for (std::size_t r = 0; r < u.size(); ++r) u[r] /= delta[r];
  return u;
}

inline std::vector<SlaveVector> update_lambda(const FactorGraph& graph, const std::vector<SlaveVector>& lambda,
                                              const std::vector<SlaveVector>& z, const std::vector<double>& u,
                                              double eta) {
  std::vector<SlaveVector> out = lambda;
  const auto& slaves = graph.slaves();
  for (std::size_t s = 0; s < slaves.size(); ++s)
    for (int k = 0; k < Slave::kArity; ++k) out[s][k] -= eta * (z[s][k] - u[slaves[s].arc_index[k]]);
  return out;
}

// Root-mean-square residuals: primal measures slave/consensus disagreement,
// dual the rho-scaled drift of u, both normalized by sqrt(sum_s |R_s|).
inline std::pair<double, double> residuals(const FactorGraph& graph, const AdmmState& prev, const AdmmState& curr,
                                           double rho) {
  const int slots = graph.total_slots();
  if (slots == 0) return {0.0, 0.0};
  double primal = 0.0;
  const auto& slaves = graph.slaves();
  for (std::size_t s = 0; s < slaves.size(); ++s) {
    for (int k = 0; k < Slave::kArity; ++k) {
      const double d = curr.z[s][k] - curr.u[slaves[s].arc_index[k]];
      primal += d * d;
    }
  }
  double dual = 0.0;
  const auto& delta = graph.deltas();
  for (std::size_t r = 0; r < curr.u.size(); ++r) {
    const double d = curr.u[r] - prev.u[r];
    dual += delta[r] * d * d;
  }
  const double norm = std::sqrt(static_cast<double>(slots));
  return {std::sqrt(primal) / norm, rho * std::sqrt(dual) / norm};
}

// Called after every iteration with the freshly updated state.
using AdmmObserver = std::function<void(const AdmmState&, double objective)>;

inline double decomposed_objective(const FactorGraph& graph, const std::vector<SlaveVector>& z) {
  double total = 0.0;
  const auto& slaves = graph.slaves();
  for (std::size_t s = 0; s < slaves.size(); ++s) total += slave_score(slaves[s], z[s]);
  return total;
}

inline AdmmState initial_state(const FactorGraph& graph) {
  AdmmState st;
  st.u.resize(graph.arcs().size());
  for (std::size_t r = 0; r < st.u.size(); ++r) st.u[r] = logistic(graph.arc_scores()[r]);
  const auto& slaves = graph.slaves();
  st.z.resize(slaves.size());
  st.lambda.assign(slaves.size(), SlaveVector{0.0, 0.0});
  for (std::size_t s = 0; s < slaves.size(); ++s)
    for (int k = 0; k < Slave::kArity; ++k) st.z[s][k] = st.u[slaves[s].arc_index[k]];
  return st;
}

inline MapResult run_admm(const FactorGraph& graph, const AdmmConfig& config = {},
                          const AdmmObserver& observer = {}) {
  config.validate();
  MapResult result;
  result.arcs = graph.arcs();
  if (graph.empty()) return result;

  for (std::size_t r = 0; r < graph.arcs().size(); ++r)
    if (!std::isfinite(graph.arc_scores()[r]))
      throw NumericError("admm: non-finite score on arc " + to_string(graph.arcs()[r]));
  for (const Slave& s : graph.slaves())
    for (int k = 0; k < Slave::kArity; ++k)
      if (!std::isfinite(s.theta[k])) throw NumericError("admm: non-finite slave score on arc " + to_string(s.arcs[k]));

  const auto& slaves = graph.slaves();
  AdmmState state = initial_state(graph);
  result.converged = false;
  for (int t = 0; t < config.max_iters; ++t) {
    AdmmState next;
    next.z.resize(slaves.size());
    for (std::size_t s = 0; s < slaves.size(); ++s) {
      SlaveVector u_prev;
      for (int k = 0; k < Slave::kArity; ++k) u_prev[k] = state.u[slaves[s].arc_index[k]];
      next.z[s] = solve_slave(slaves[s], state.lambda[s], u_prev, config.rho, config.mode);
    }
    next.u = update_u(graph, next.z);
    const double eta = config.eta0 / std::sqrt(static_cast<double>(t + 1));
    next.lambda = update_lambda(graph, state.lambda, next.z, next.u, eta);
    next.iter = t + 1;
    std::tie(next.primal_residual, next.dual_residual) = residuals(graph, state, next, config.rho);
    state = std::move(next);
    if (observer) observer(state, decomposed_objective(graph, state.z));
    if (state.primal_residual < config.eps_primal && state.dual_residual < config.eps_dual) {
      result.converged = true;
      break;
    }
  }

  result.u_relaxed = state.u;
  result.u_rounded.resize(state.u.size());
  result.integral = true;
  for (std::size_t r = 0; r < state.u.size(); ++r) {
    const double v = state.u[r];
    result.u_rounded[r] = v >= config.rounding_threshold ? 1 : 0;
    if (std::min(std::abs(v), std::abs(1.0 - v)) > config.integrality_tol) result.integral = false;
  }
  result.objective = decomposed_objective(graph, state.z);
  result.iterations = state.iter;
  result.primal_residual = state.primal_residual;
  result.dual_residual = state.dual_residual;
  return result;
}

}  // namespace hodep

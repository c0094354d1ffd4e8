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

#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "hodep/admm.hpp"
#include "hodep/arc_scores.hpp"
#include "hodep/common.hpp"
#include "hodep/corpus.hpp"
#include "hodep/tree.hpp"

namespace hodep {

// Per-dependent distribution over heads. Column j-1 is dependent j; each
// column sums to one over heads i != j.
struct HeadDistribution {
  Matrix p;      // (n+1) x n
  Matrix log_p;  // same layout, -inf on self-arcs
  Matrix adjusted_scores;

  int size() const { return static_cast<int>(p.cols()); }
  double operator()(int head, int dep) const { return p(head, dep - 1); }
};

// p[.][j] = softmax_i (s[i][j] + beta * u(i -> j)); the consensus term only
// touches arcs covered by the factor graph.
inline HeadDistribution head_distribution(const ArcScoreTable& scores, const MapResult* consensus = nullptr,
                                          double beta = 1.0) {
  const int n = scores.size();
  HeadDistribution out;
  out.adjusted_scores = scores.matrix();
  if (consensus && beta != 0.0) {
    for (std::size_t r = 0; r < consensus->arcs.size(); ++r) {
      const ArcId& a = consensus->arcs[r];
      out.adjusted_scores(a.head, a.dep - 1) += beta * consensus->u_relaxed[r];
    }
  }
  out.p = Matrix::Zero(n + 1, n);
  out.log_p = Matrix::Constant(n + 1, n, -std::numeric_limits<double>::infinity());
  for (int j = 1; j <= n; ++j) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n; ++i)
      if (i != j) mx = std::max(mx, out.adjusted_scores(i, j - 1));
    double total = 0.0;
    for (int i = 0; i <= n; ++i)
      if (i != j) total += std::exp(out.adjusted_scores(i, j - 1) - mx);
    const double log_norm = mx + std::log(total);
    for (int i = 0; i <= n; ++i) {
      if (i == j) continue;
      out.log_p(i, j - 1) = out.adjusted_scores(i, j - 1) - log_norm;
      out.p(i, j - 1) = std::exp(out.log_p(i, j - 1));
    }
  }
  return out;
}

// Per-dependent marginal argmax; ties go to the smaller head index.
inline std::vector<int> mbr_decode(const HeadDistribution& dist) {
  const int n = dist.size();
  std::vector<int> heads(n);
  for (int j = 1; j <= n; ++j) {
    int best = -1;
    double best_p = -1.0;
    for (int i = 0; i <= n; ++i) {
      if (i == j) continue;
      if (dist.p(i, j - 1) > best_p) {
        best_p = dist.p(i, j - 1);
        best = i;
      }
    }
    heads[j - 1] = best;
  }
  return heads;
}

namespace detail {

// Chu-Liu/Edmonds on a dense score matrix over nodes 0..V-1 with root 0.
// w(h, d) is the weight of h -> d; returns head[d] (head[0] = -1).
inline std::vector<int> chu_liu_edmonds(const Matrix& w) {
  const int V = static_cast<int>(w.rows());
  std::vector<int> head(V, -1);
  for (int d = 1; d < V; ++d) {
    int best = -1;
    for (int h = 0; h < V; ++h) {
      if (h == d) continue;
      if (best < 0 || w(h, d) > w(best, d)) best = h;
    }
    head[d] = best;
  }

  // Find a cycle among the greedy choices.
  std::vector<int> color(V, 0), cycle;
  for (int start = 1; start < V && cycle.empty(); ++start) {
    if (color[start]) continue;
    std::vector<int> path;
    int v = start;
    while (v > 0 && color[v] == 0) {
      color[v] = start;
      path.push_back(v);
      v = head[v];
    }
    if (v > 0 && color[v] == start) {
      int c = v;
      do {
        cycle.push_back(c);
        c = head[c];
      } while (c != v);
    }
  }
  if (cycle.empty()) return head;

  std::vector<char> in_cycle(V, 0);
  for (int c : cycle) in_cycle[c] = 1;
  double cycle_weight = 0.0;
  for (int c : cycle) cycle_weight += w(head[c], c);

  // Contracted graph: non-cycle nodes keep their order, the cycle becomes
  // the last node.
  std::vector<int> old_of_new, new_of_old(V, -1);
  for (int v = 0; v < V; ++v)
    if (!in_cycle[v]) {
      new_of_old[v] = static_cast<int>(old_of_new.size());
      old_of_new.push_back(v);
    }
  const int C = static_cast<int>(old_of_new.size());
  const int W = C + 1;
  const double kNone = -std::numeric_limits<double>::infinity();
  Matrix cw = Matrix::Constant(W, W, kNone);
  std::vector<int> enter_at(W, -1);  // for u -> cycle: which cycle node is entered
  std::vector<int> leave_from(W, -1);  // for cycle -> v: which cycle node leaves

  for (int a = 0; a < C; ++a) {
    const int u = old_of_new[a];
    for (int b = 0; b < C; ++b) {
      if (a != b) cw(a, b) = w(u, old_of_new[b]);
    }
    // u -> cycle
    double best = kNone;
    int best_v = -1;
    for (int v : cycle) {
      const double val = w(u, v) - w(head[v], v) + cycle_weight;
      if (best_v < 0 || val > best) {
        best = val;
        best_v = v;
      }
    }
    cw(a, C) = best;
    enter_at[a] = best_v;
    // cycle -> u
    if (u != 0) {
      double bo = kNone;
      int bv = -1;
      for (int v : cycle) {
        if (bv < 0 || w(v, u) > bo) {
          bo = w(v, u);
          bv = v;
        }
      }
      cw(C, a) = bo;
      leave_from[a] = bv;
    }
  }

  const std::vector<int> sub = chu_liu_edmonds(cw);
  std::vector<int> result(V, -1);
  for (int b = 1; b < W; ++b) {
    const int h = sub[b];
    if (b == C) {
      const int entered = enter_at[h];
      for (int c : cycle) result[c] = head[c];
      result[entered] = old_of_new[h];
    } else {
      const int d = old_of_new[b];
      result[d] = (h == C) ? leave_from[b] : old_of_new[h];
    }
  }
  return result;
}

}  // namespace detail

// Maximum-weight arborescence rooted at 0. `weights` uses the (n+1) x n score
// layout; self-arc entries are ignored.
inline std::vector<int> mst_decode(const Matrix& weights) {
  const int n = static_cast<int>(weights.cols());
  if (weights.rows() != n + 1) throw ValidationError("mst_decode: weights must be (n+1) x n");
  Matrix w = Matrix::Constant(n + 1, n + 1, -std::numeric_limits<double>::infinity());
  for (int h = 0; h <= n; ++h)
    for (int d = 1; d <= n; ++d)
      if (h != d) {
        if (!std::isfinite(weights(h, d - 1)))
          throw NumericError("mst_decode: non-finite weight on arc " + std::to_string(h) + "->" + std::to_string(d));
        w(h, d) = weights(h, d - 1);
      }
  const std::vector<int> head = detail::chu_liu_edmonds(w);
  return std::vector<int>(head.begin() + 1, head.end());
}

// Unlabeled attachment score of one sentence.
inline double uas(std::span<const int> predicted, const Sentence& gold) {
  if (static_cast<int>(predicted.size()) != gold.size())
    throw ValidationError("uas: predicted length " + std::to_string(predicted.size()) + " != gold length " +
                          std::to_string(gold.size()));
  if (predicted.empty()) throw ValidationError("uas: empty sentence");
  int correct = 0;
  for (std::size_t j = 0; j < predicted.size(); ++j) correct += predicted[j] == gold.gold_heads[j];
  return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

// Micro-averaged UAS over a corpus (token-weighted).
inline double corpus_uas(const std::vector<std::vector<int>>& predicted, const std::vector<Sentence>& gold) {
  if (predicted.size() != gold.size())
    throw ValidationError("uas: " + std::to_string(predicted.size()) + " predicted sentences vs " +
                          std::to_string(gold.size()) + " gold");
  long correct = 0, total = 0;
  for (std::size_t k = 0; k < gold.size(); ++k) {
    if (static_cast<int>(predicted[k].size()) != gold[k].size())
      throw ValidationError("uas: sentence " + std::to_string(k + 1) + " length mismatch");
    for (std::size_t j = 0; j < predicted[k].size(); ++j) correct += predicted[k][j] == gold[k].gold_heads[j];
    total += gold[k].size();
  }
  if (total == 0) throw ValidationError("uas: empty corpus");
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace hodep

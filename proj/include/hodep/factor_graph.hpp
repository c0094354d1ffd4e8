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

// Second-order factor graph over token-token arcs.
//
// For every anchor i in [1, n-2] the graph holds two forward slaves over the
// window (i, i+1, i+2):
//
//   grandparent  GPf_i = { i -> i+1, i+1 -> i+2 }
//   sibling      SBf_i = { i -> i+1, i   -> i+2 }
//
// and optionally their mirrored (right-to-left) counterparts
//
//   GPb_i = { i+2 -> i+1, i+1 -> i }
//   SBb_i = { i+2 -> i+1, i+2 -> i }
//
// Arcs shared between slaves are the consensus variables of dual
// decomposition; delta(r) counts the slaves covering arc r.

#pragma once

#include <array>
#include <compare>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hodep/arc_scores.hpp"
#include "hodep/common.hpp"

namespace hodep {

struct ArcId {
  int head = 0;
  int dep = 0;

  auto operator<=>(const ArcId&) const = default;
};

inline std::ostream& operator<<(std::ostream& os, const ArcId& a) {
  return os << a.head << "->" << a.dep;
}

inline std::string to_string(const ArcId& a) {
  std::ostringstream os;
  os << a;
  return os.str();
}

enum class SlaveKind { kGrandparentForward, kSiblingForward, kGrandparentBackward, kSiblingBackward };

inline const char* to_string(SlaveKind k) {
  switch (k) {
    case SlaveKind::kGrandparentForward: return "grandparent-forward";
    case SlaveKind::kSiblingForward: return "sibling-forward";
    case SlaveKind::kGrandparentBackward: return "grandparent-backward";
    case SlaveKind::kSiblingBackward: return "sibling-backward";
  }
  return "?";
}

using Pattern = std::array<int, 2>;

struct Slave {
  static constexpr int kArity = 2;

  SlaveKind kind = SlaveKind::kGrandparentForward;
  int anchor = 0;
  std::array<ArcId, kArity> arcs{};
  std::array<int, kArity> arc_index{};  // positions in FactorGraph::arcs()
  std::array<double, kArity> theta{};
  // Admissible binary configurations, consulted only by the pattern-mode
  // slave solver. Empty means all four corners of the unit square.
  std::vector<Pattern> admissible;
};

// f_s(z_s) = sum_r theta_s(r) z_s(r)
inline double slave_score(const Slave& slave, std::span<const double, Slave::kArity> z) {
  double total = 0.0;
  for (int k = 0; k < Slave::kArity; ++k) total += slave.theta[k] * z[k];
  return total;
}

struct FactorGraphOptions {
  bool include_backward = false;
  // Divide each arc score by delta(r) when copying it into the slaves, so the
  // decomposed objective equals the first-order objective on overlaps.
  bool split_scores = false;
};

class FactorGraph {
 public:
  FactorGraph() = default;

  static FactorGraph build(const ArcScoreTable& scores, const FactorGraphOptions& options = {}) {
    const int n = scores.size();
    FactorGraph g;
    g.n_ = n;
    auto add = [&](SlaveKind kind, int anchor, ArcId a, ArcId b) {
      Slave s;
      s.kind = kind;
      s.anchor = anchor;
      s.arcs = {a, b};
      g.slaves_.push_back(s);
    };
    for (int i = 1; i + 2 <= n; ++i)
      add(SlaveKind::kGrandparentForward, i, {i, i + 1}, {i + 1, i + 2});
    for (int i = 1; i + 2 <= n; ++i)
      add(SlaveKind::kSiblingForward, i, {i, i + 1}, {i, i + 2});
    if (options.include_backward) {
      for (int i = 1; i + 2 <= n; ++i)
        add(SlaveKind::kGrandparentBackward, i, {i + 2, i + 1}, {i + 1, i});
      for (int i = 1; i + 2 <= n; ++i)
        add(SlaveKind::kSiblingBackward, i, {i + 2, i + 1}, {i + 2, i});
    }

    return from_slaves(scores, std::move(g.slaves_), options.split_scores);
  }

  // Assembles a graph from explicit slaves (kind, anchor and arcs set);
  // indices, deltas and theta are filled in here.
  static FactorGraph from_slaves(const ArcScoreTable& scores, std::vector<Slave> slaves, bool split_scores = false) {
    FactorGraph g;
    g.n_ = scores.size();
    g.slaves_ = std::move(slaves);
    for (auto& s : g.slaves_) {
      for (int k = 0; k < Slave::kArity; ++k) {
        const ArcId a = s.arcs[k];
        if (a.head < 1 || a.head > g.n_ || a.dep < 1 || a.dep > g.n_ || a.head == a.dep)
          throw ValidationError("factor graph: invalid arc " + to_string(a));
        auto [it, inserted] = g.index_.try_emplace(a, static_cast<int>(g.arcs_.size()));
        if (inserted) {
          g.arcs_.push_back(a);
          g.delta_.push_back(0);
          g.scores_.push_back(scores(a.head, a.dep));
        }
        s.arc_index[k] = it->second;
        ++g.delta_[it->second];
      }
      if (s.arcs[0] == s.arcs[1]) throw ValidationError("factor graph: slave arcs must be distinct");
    }
    for (auto& s : g.slaves_) {
      for (int k = 0; k < Slave::kArity; ++k) {
        const int r = s.arc_index[k];
        s.theta[k] = split_scores ? g.scores_[r] / g.delta_[r] : g.scores_[r];
      }
    }
    return g;
  }

  int sentence_length() const { return n_; }
  bool empty() const { return slaves_.empty(); }

  const std::vector<Slave>& slaves() const { return slaves_; }
  std::vector<Slave>& mutable_slaves() { return slaves_; }
  const std::vector<ArcId>& arcs() const { return arcs_; }
  // First-order score of each arc, aligned with arcs().
  const std::vector<double>& arc_scores() const { return scores_; }
  const std::vector<int>& deltas() const { return delta_; }

  bool contains(const ArcId& arc) const { return index_.count(arc) != 0; }

  int index_of(const ArcId& arc) const {
    const auto it = index_.find(arc);
    if (it == index_.end()) throw LookupError("arc " + to_string(arc) + " is not in the factor graph");
    return it->second;
  }

  int delta_of(const ArcId& arc) const { return delta_[index_of(arc)]; }

  // Sum over slaves of |R_s|.
  int total_slots() const { return static_cast<int>(slaves_.size()) * Slave::kArity; }

  void dump(std::ostream& os) const {
    os << "factor-graph n=" << n_ << " slaves=" << slaves_.size() << " arcs=" << arcs_.size() << '\n';
    for (std::size_t s = 0; s < slaves_.size(); ++s) {
      const Slave& sl = slaves_[s];
      os << "slave " << s << ' ' << to_string(sl.kind) << " anchor=" << sl.anchor << " arcs=" << sl.arcs[0]
         << ',' << sl.arcs[1] << " theta=" << sl.theta[0] << ',' << sl.theta[1] << '\n';
    }
    for (std::size_t r = 0; r < arcs_.size(); ++r)
      os << "arc " << arcs_[r] << " delta=" << delta_[r] << " score=" << scores_[r] << '\n';
  }

 private:
  int n_ = 0;
  std::vector<Slave> slaves_;
  std::vector<ArcId> arcs_;
  std::vector<double> scores_;
  std::vector<int> delta_;
  std::map<ArcId, int> index_;
};

inline FactorGraph build_factor_graph(const ArcScoreTable& scores, const FactorGraphOptions& options = {}) {
  return FactorGraph::build(scores, options);
}

}  // namespace hodep

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

// Self-check suites: each pits a production path against an exhaustive or
// finite-difference oracle on small random instances.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hodep/admm.hpp"
#include "hodep/corpus.hpp"
#include "hodep/decoder.hpp"
#include "hodep/factor_graph.hpp"
#include "hodep/oracle.hpp"
#include "hodep/scorer.hpp"
#include "hodep/trainer.hpp"

namespace hodep::verify {

struct SuiteReport {
  std::string name;
  bool passed = true;
  std::vector<std::string> details;
  double seconds = 0.0;

  void check(bool ok, const std::string& what) {
    details.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
    passed = passed && ok;
  }
};

// Uniform draws from raw mt19937_64 output so results do not depend on the
// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi) { return lo + (hi - lo) * (static_cast<double>(engine_() >> 11) * 0x1.0p-53); }
  int index(int bound) { return static_cast<int>(engine_() % static_cast<std::uint64_t>(bound)); }

 private:
  std::mt19937_64 engine_;
};

inline ArcScoreTable random_scores(int n, Rng& rng, double lo, double hi) {
  Matrix m(n + 1, n);
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rng.uniform(lo, hi);
  return ArcScoreTable(m);
}

inline std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

template <typename F>
SuiteReport timed(const std::string& name, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  SuiteReport r;
  r.name = name;
  body(r);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

// delta(h -> d) straight from the construction rule, one anchor at a time.
inline int enumerate_delta(int n, ArcId arc, bool include_backward) {
  int count = 0;
  for (int i = 1; i + 2 <= n; ++i) {
    const ArcId gp[2] = {{i, i + 1}, {i + 1, i + 2}};
    const ArcId sb[2] = {{i, i + 1}, {i, i + 2}};
    count += (arc == gp[0] || arc == gp[1]);
    count += (arc == sb[0] || arc == sb[1]);
    if (include_backward) {
      const ArcId gpb[2] = {{i + 2, i + 1}, {i + 1, i}};
      const ArcId sbb[2] = {{i + 2, i + 1}, {i + 2, i}};
      count += (arc == gpb[0] || arc == gpb[1]);
      count += (arc == sbb[0] || arc == sbb[1]);
    }
  }
  return count;
}

inline SuiteReport factor_graph_suite() {
  return timed("factor-graph", [](SuiteReport& r) {
    const FactorGraph g5 = FactorGraph::build(ArcScoreTable(5));
    r.check(g5.slaves().size() == 6, "n=5 forward: 6 slaves (got " + std::to_string(g5.slaves().size()) + ")");
    r.check(g5.arcs().size() == 7, "n=5 forward: 7 distinct arcs (got " + std::to_string(g5.arcs().size()) + ")");
    bool gp3 = false;
    for (const Slave& s : g5.slaves())
      if (s.kind == SlaveKind::kGrandparentForward && s.anchor == 3)
        gp3 = s.arcs[0] == ArcId{3, 4} && s.arcs[1] == ArcId{4, 5};
    r.check(gp3, "n=5: GPf_3 = {3->4, 4->5}");

    bool deltas_ok = true;
    for (bool backward : {false, true}) {
      for (int n = 1; n <= 12; ++n) {
        const FactorGraph g = FactorGraph::build(ArcScoreTable(n), {.include_backward = backward});
        int expected_arcs = 0;
        for (int h = 1; h <= n; ++h) {
          for (int d = 1; d <= n; ++d) {
            if (h == d) continue;
            const int e = enumerate_delta(n, {h, d}, backward);
            if (e == 0) {
              deltas_ok = deltas_ok && !g.contains({h, d});
              continue;
            }
            ++expected_arcs;
            deltas_ok = deltas_ok && g.contains({h, d}) && g.delta_of({h, d}) == e;
          }
        }
        deltas_ok = deltas_ok && static_cast<int>(g.arcs().size()) == expected_arcs;
        const int expected_slaves = (backward ? 4 : 2) * std::max(0, n - 2);
        deltas_ok = deltas_ok && static_cast<int>(g.slaves().size()) == expected_slaves;
      }
    }
    r.check(deltas_ok, "delta table and arc/slave counts match enumeration for n <= 12 (forward and backward)");
  });
}

struct AdmmSuiteOptions {
  int seeds = 100;
  std::vector<int> lengths = {3, 4, 5, 6};
  double min_converged_fraction = 0.90;
  double lambda_tol = 1e-9;
};

inline SuiteReport admm_suite(const AdmmSuiteOptions& opt = {}) {
  return timed("admm", [&](SuiteReport& r) {
    int instances = 0, converged = 0, integral = 0, mismatches = 0;
    double worst_lambda = 0.0;
    bool bounded = true;
    for (int n : opt.lengths) {
      for (int seed = 0; seed < opt.seeds; ++seed) {
        Rng rng(static_cast<std::uint64_t>(1000 * n + seed));
        const FactorGraph g = FactorGraph::build(random_scores(n, rng, -2.0, 2.0));
        const auto& slaves = g.slaves();
        const MapResult res = run_admm(g, AdmmConfig{}, [&](const AdmmState& st, double) {
          std::vector<double> sums(g.arcs().size(), 0.0);
          for (std::size_t s = 0; s < slaves.size(); ++s)
            for (int k = 0; k < Slave::kArity; ++k) {
              sums[slaves[s].arc_index[k]] += st.lambda[s][k];
              bounded = bounded && st.z[s][k] >= 0.0 && st.z[s][k] <= 1.0;
            }
          for (double v : sums) worst_lambda = std::max(worst_lambda, std::abs(v));
          for (double v : st.u) bounded = bounded && v >= 0.0 && v <= 1.0;
        });
        ++instances;
        converged += res.converged;
        if (res.integral) {
          ++integral;
          const ConsistentMap exact = brute_force_consistent_map(g);
          if (exact.assignment != res.u_rounded) ++mismatches;
        }
      }
    }
    const double frac = instances ? static_cast<double>(converged) / instances : 1.0;
    r.check(mismatches == 0, "integral results equal brute-force consistent maximizer (" + std::to_string(integral) +
                                 " integral of " + std::to_string(instances) + ", " + std::to_string(mismatches) +
                                 " mismatches)");
    r.check(worst_lambda <= opt.lambda_tol, "lambda-sum invariant max |sum_s lambda_s(r)| = " + fmt(worst_lambda));
    r.check(bounded, "z and u stay inside [0,1]");
    r.check(frac >= opt.min_converged_fraction, "residuals < 1e-4 within 300 iterations on " + fmt(100.0 * frac) +
                                                    "% of instances (need >= " +
                                                    fmt(100.0 * opt.min_converged_fraction) + "%)");
  });
}

// 1001-point grid search of  a z - rho/2 z^2  on [0,1].
inline double grid_slave_optimum(double a, double rho, int points = 1001) {
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < points; ++k) {
    const double z = static_cast<double>(k) / (points - 1);
    best = std::max(best, a * z - 0.5 * rho * z * z);
  }
  return best;
}

inline SuiteReport slave_suite(int draws = 1000, std::uint64_t seed = 7) {
  return timed("slave", [&](SuiteReport& r) {
    Rng rng(seed);
    double worst = 0.0;
    bool never_worse = true;
    for (int t = 0; t < draws; ++t) {
      Slave s;
      s.theta = {rng.uniform(-3, 3), rng.uniform(-3, 3)};
      const SlaveVector lambda{rng.uniform(-1, 1), rng.uniform(-1, 1)};
      const SlaveVector u{rng.uniform(0, 1), rng.uniform(0, 1)};
      const double rho = rng.uniform(0.5, 2.0);
      const SlaveVector z = solve_slave(s, lambda, u, rho);
      double closed = 0.0, grid = 0.0;
      for (int k = 0; k < Slave::kArity; ++k) {
        const double a = s.theta[k] + lambda[k] + rho * u[k];
        closed += a * z[k] - 0.5 * rho * z[k] * z[k];
        grid += grid_slave_optimum(a, rho);
      }
      worst = std::max(worst, std::abs(closed - grid));
      never_worse = never_worse && closed >= grid - 1e-12;
    }
    r.check(worst <= 1e-6, "closed-form slave objective matches 1001-point grid search, max gap " + fmt(worst));
    r.check(never_worse, "closed form never below the grid optimum");
  });
}

struct OracleSuiteOptions {
  int seeds = 50;
  double tree_tol = 1e-9;
  double logz_tol = 1e-6;
  double loopy_bound = 0.05;
};

// Soft at-most-one-head coupling between arcs sharing a dependent; closes
// cycles in the otherwise tree-shaped forward graph.
inline void add_head_exclusion(DiscreteFactorGraph& dfg, const FactorGraph& g) {
  for (std::size_t a = 0; a < g.arcs().size(); ++a)
    for (std::size_t b = a + 1; b < g.arcs().size(); ++b)
      if (g.arcs()[a].dep == g.arcs()[b].dep)
        dfg.add_factor({static_cast<int>(a), static_cast<int>(b)}, {1.0, 1.0, 1.0, 0.25});
}

inline double max_belief_error(const LbpResult& approx, const ExactResult& exact) {
  double worst = 0.0;
  for (std::size_t v = 0; v < exact.marginals.size(); ++v)
    worst = std::max(worst, std::abs(approx.variable_beliefs[v][1] - exact.marginals[v]));
  return worst;
}

inline SuiteReport oracle_suite(const OracleSuiteOptions& opt = {}) {
  return timed("lbp", [&](SuiteReport& r) {
    double tree_err = 0.0, logz_err = 0.0, loopy_err = 0.0, parser_err = 0.0;
    bool positive = true;
    for (int seed = 0; seed < opt.seeds; ++seed) {
      Rng rng(static_cast<std::uint64_t>(500 + seed));
      // Acyclic: a single slave and its two arcs.
      {
        const ArcScoreTable s3 = random_scores(3, rng, -1.0, 1.0);
        const FactorGraph g = FactorGraph::build(s3);
        const PotentialTable psi = potentials(s3, g);
        const Slave& s = g.slaves()[0];
        const double a = psi.unary(s.arcs[0]);
        const double b = psi.unary(s.arcs[1]);
        DiscreteFactorGraph tree(2);
        tree.add_factor({0}, {1.0, a});
        tree.add_factor({1}, {1.0, b});
        tree.add_factor({0, 1}, {1.0, a + 1.0, b + 1.0, a + b + 1.0});
        const LbpResult bp = lbp(tree);
        tree_err = std::max(tree_err, max_belief_error(bp, brute_force(tree)));
        positive = positive && bp.messages_positive;
      }
      // n = 5 forward parser graph (a tree over its 7 arcs).
      const ArcScoreTable scores = random_scores(5, rng, -1.0, 1.0);
      const FactorGraph g5 = FactorGraph::build(scores);
      const DiscreteFactorGraph parser = DiscreteFactorGraph::from_parser_graph(potentials(scores, g5), g5);
      const LbpResult bp5 = lbp(parser);
      parser_err = std::max(parser_err, max_belief_error(bp5, brute_force(parser)));
      positive = positive && bp5.messages_positive;
      // Same graph with cycles closed by head-exclusion couplings.
      DiscreteFactorGraph loopy = parser;
      add_head_exclusion(loopy, g5);
      const LbpResult bpl = lbp(loopy, {.max_rounds = 2000, .damping = 0.5, .tol = 1e-10});
      loopy_err = std::max(loopy_err, max_belief_error(bpl, brute_force(loopy)));
      positive = positive && bpl.messages_positive;
      // log Z gradient identity on an n = 4 parser graph.
      const ArcScoreTable s4 = random_scores(4, rng, -1.0, 1.0);
      const FactorGraph g4 = FactorGraph::build(s4);
      const DiscreteFactorGraph base = DiscreteFactorGraph::from_parser_graph(potentials(s4, g4), g4);
      std::vector<double> theta(g4.arcs().size());
      for (double& t : theta) t = rng.uniform(-1.0, 1.0);
      logz_err = std::max(logz_err, check_logz_gradient(base, theta));
    }
    r.check(tree_err <= opt.tree_tol, "LBP = brute force on single-slave trees, max error " + fmt(tree_err));
    r.check(parser_err <= opt.tree_tol, "LBP = brute force on n=5 forward parser graphs (acyclic), max error " +
                                            fmt(parser_err));
    r.check(logz_err <= opt.logz_tol, "d logZ / d theta = exact marginal by finite differences, max deviation " +
                                          fmt(logz_err));
    r.check(loopy_err <= opt.loopy_bound, "loopy n=5 graphs: max LBP belief error " + fmt(loopy_err) +
                                              " (bound " + fmt(opt.loopy_bound) + ")");
    r.check(positive, "messages positive and normalized every round");
  });
}

inline SuiteReport mst_suite(int seeds = 200, int max_n = 6) {
  return timed("mst", [&](SuiteReport& r) {
    int mismatches = 0, non_trees = 0, instances = 0;
    for (int n = 1; n <= max_n; ++n) {
      for (int seed = 0; seed < seeds; ++seed) {
        Rng rng(static_cast<std::uint64_t>(77 * n + 100003 * seed));
        Matrix w(n + 1, n);
        for (int i = 0; i <= n; ++i)
          for (int j = 0; j < n; ++j) w(i, j) = rng.uniform(-5.0, 5.0);
        const std::vector<int> heads = mst_decode(w);
        const Arborescence exact = brute_force_arborescence(w);
        ++instances;
        if (!is_tree(heads)) ++non_trees;
        double score = 0.0;
        for (int j = 1; j <= n; ++j) score += w(heads[j - 1], j - 1);
        if (heads != exact.heads || std::abs(score - exact.score) > 1e-9) ++mismatches;
      }
    }
    r.check(mismatches == 0, "Chu-Liu/Edmonds equals exhaustive arborescence search on " + std::to_string(instances) +
                                 " instances (" + std::to_string(mismatches) + " mismatches)");
    r.check(non_trees == 0, "every decoded output is a tree");
  });
}

// Random well-formed sentences over a small synthetic lexicon.
inline std::vector<Sentence> random_sentences(int count, int min_len, int max_len, Rng& rng) {
  static const char* kWords[] = {"the", "dog", "saw", "a", "cat", "in", "park", "ran", "quickly", "big"};
  static const char* kTags[] = {"DET", "NOUN", "VERB", "ADP", "ADJ", "ADV"};
  std::vector<Sentence> out;
  for (int c = 0; c < count; ++c) {
    const int n = min_len + rng.index(max_len - min_len + 1);
    Sentence s;
    // Attach tokens in a random order so every prefix is a tree.
    std::vector<int> order(n);
    for (int k = 0; k < n; ++k) order[k] = k + 1;
    for (int k = n - 1; k > 0; --k) std::swap(order[k], order[rng.index(k + 1)]);
    s.gold_heads.assign(n, 0);
    for (int k = 1; k < n; ++k) s.gold_heads[order[k] - 1] = order[rng.index(k)];
    for (int k = 0; k < n; ++k) {
      s.tokens.emplace_back(kWords[rng.index(10)]);
      s.pos_tags.emplace_back(kTags[rng.index(6)]);
    }
    out.push_back(std::move(s));
  }
  return out;
}

struct GradientSuiteOptions {
  double fraction = 0.01;
  int min_per_tensor = 4;
  double step = 1e-5;
  double tol = 1e-3;
  std::uint64_t seed = 11;
  EncoderKind encoder = EncoderKind::kBiRnn;
};

// Summed first-order loss over a batch, optionally accumulating gradients.
inline double batch_loss(const std::vector<Sentence>& batch, const Vocabulary& vocab, const ScorerParams& params,
                         ScorerParams* grad = nullptr) {
  double total = 0.0;
  for (const Sentence& s : batch) {
    ForwardTape tape;
    const ArcScoreTable scores = score_sentence(s, vocab, params, &tape);
    const LossResult loss = head_loss(head_distribution(scores), s);
    total += loss.value;
    if (grad) *grad += backward(loss.grad, tape, params);
  }
  return total;
}

inline SuiteReport gradient_suite(const GradientSuiteOptions& opt = {}) {
  return timed("gradient", [&](SuiteReport& r) {
    Rng rng(opt.seed);
    const std::vector<Sentence> batch = random_sentences(3, 3, 6, rng);
    const Vocabulary vocab = build_vocab(batch, 1);
    ScorerDims dims;
    dims.words = vocab.word_count();
    dims.tags = vocab.pos_count();
    dims.d_emb = 8;
    dims.d_pos = 4;
    dims.d_hidden = 6;
    dims.d_arc = 5;
    dims.encoder = opt.encoder;
    ScorerParams params = ScorerParams::random(dims, opt.seed, 0.5);
    ScorerParams grad = params.zeros_like();
    batch_loss(batch, vocab, params, &grad);

    double worst = 0.0;
    int sampled = 0;
    auto ptensors = params.tensors();
    auto gtensors = grad.tensors();
    for (std::size_t k = 0; k < ptensors.size(); ++k) {
      Matrix& t = *ptensors[k].second;
      if (t.size() == 0) continue;
      const int want = std::max(opt.min_per_tensor, static_cast<int>(std::ceil(opt.fraction * t.size())));
      for (int q = 0; q < std::min<int>(want, static_cast<int>(t.size())); ++q) {
        const Eigen::Index idx = rng.index(static_cast<int>(t.size()));
        const double orig = t.data()[idx];
        t.data()[idx] = orig + opt.step;
        const double up = batch_loss(batch, vocab, params);
        t.data()[idx] = orig - opt.step;
        const double down = batch_loss(batch, vocab, params);
        t.data()[idx] = orig;
        const double fd = (up - down) / (2.0 * opt.step);
        const double an = gtensors[k].second->data()[idx];
        const double rel = std::abs(fd - an) / std::max({1e-6, std::abs(fd), std::abs(an)});
        worst = std::max(worst, rel);
        ++sampled;
      }
    }
    r.check(worst <= opt.tol, "analytic vs central finite differences on " + std::to_string(sampled) +
                                  " sampled parameters (3-sentence batch), max rel. error " + fmt(worst));
  });
}

}  // namespace hodep::verify

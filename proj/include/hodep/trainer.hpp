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

// End-to-end training and parsing.
//
// Per sentence: score arcs with the biaffine scorer; in high-order mode build
// the second-order factor graph over those scores and run ADMM; fold the
// consensus u back into the scores (s + beta * u); take a per-dependent
// softmax over heads. Training minimizes head-wise cross-entropy of that
// distribution. The consensus enters as a constant, so gradients stop at the
// inference boundary. Decoding takes the per-dependent argmax and falls back
// to the maximum spanning arborescence when the argmax is not a tree.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hodep/admm.hpp"
#include "hodep/common.hpp"
#include "hodep/corpus.hpp"
#include "hodep/decoder.hpp"
#include "hodep/factor_graph.hpp"
#include "hodep/scorer.hpp"
#include "hodep/tree.hpp"

namespace hodep {

struct LossResult {
  double value = 0.0;
  Matrix grad;  // d loss / d adjusted scores, (n+1) x n
};

// Head-wise negative log-likelihood, averaged over tokens. The gradient is
// (softmax - indicator) / n per column and zero on self-arcs.
inline LossResult head_loss(const HeadDistribution& dist, const Sentence& gold) {
  const int n = dist.size();
  if (n != gold.size()) throw ValidationError("loss: distribution and sentence lengths differ");
  LossResult out;
  out.grad = dist.p / static_cast<double>(n);
  for (int j = 1; j <= n; ++j) {
    const int g = gold.gold_heads[j - 1];
    out.value -= dist.log_p(g, j - 1);
    out.grad(g, j - 1) -= 1.0 / n;
  }
  out.value /= n;
  return out;
}

enum class OptimizerKind { kAdam, kSgd };

inline const char* to_string(OptimizerKind k) { return k == OptimizerKind::kAdam ? "adam" : "sgd"; }

inline void sgd_step(ScorerParams& params, const ScorerParams& grads, double lr) {
  auto p = params.tensors();
  auto g = grads.tensors();
  for (std::size_t k = 0; k < p.size(); ++k) *p[k].second -= lr * *g[k].second;
}

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::optional<ScorerParams> m, v;
};

inline void adam_step(ScorerParams& params, const ScorerParams& grads, AdamState& state, double lr) {
  if (!state.m) {
    state.m = params.zeros_like();
    state.v = params.zeros_like();
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  auto p = params.tensors();
  auto g = grads.tensors();
  auto m = state.m->tensors();
  auto v = state.v->tensors();
  for (std::size_t k = 0; k < p.size(); ++k) {
    Matrix& mk = *m[k].second;
    Matrix& vk = *v[k].second;
    const Matrix& gk = *g[k].second;
    mk = state.beta1 * mk + (1.0 - state.beta1) * gk;
    vk = state.beta2 * vk + (1.0 - state.beta2) * gk.cwiseProduct(gk);
    p[k].second->array() -= lr * (mk.array() / c1) / ((vk.array() / c2).sqrt() + state.eps);
  }
}

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double lr) : kind_(kind), lr_(lr) {}

  void step(ScorerParams& params, const ScorerParams& grads) {
    if (kind_ == OptimizerKind::kSgd) sgd_step(params, grads, lr_);
    else adam_step(params, grads, adam_, lr_);
  }

  OptimizerKind kind() const { return kind_; }
  double learning_rate() const { return lr_; }

 private:
  OptimizerKind kind_;
  double lr_;
  AdamState adam_;
};

struct InferenceOptions {
  bool high_order = false;
  double beta = 1.0;
  AdmmConfig admm;
  FactorGraphOptions graph;
};

struct SentenceInference {
  ArcScoreTable scores;
  std::optional<FactorGraph> graph;
  std::optional<MapResult> map;
  HeadDistribution dist;
};

inline SentenceInference infer(const Sentence& s, const Vocabulary& vocab, const ScorerParams& params,
                               const InferenceOptions& options, ForwardTape* tape = nullptr,
                               const AdmmObserver& observer = {}) {
  SentenceInference out;
  out.scores = score_sentence(s, vocab, params, tape);
  if (options.high_order) {
    out.graph = FactorGraph::build(out.scores, options.graph);
    out.map = run_admm(*out.graph, options.admm, observer);
    out.dist = head_distribution(out.scores, &*out.map, options.beta);
  } else {
    out.dist = head_distribution(out.scores);
  }
  return out;
}

struct ParseResult {
  std::vector<int> heads;
  bool mst_fallback = false;
  bool used_admm = false;
  bool admm_converged = true;
};

inline ParseResult decode(const SentenceInference& inf) {
  ParseResult out;
  out.heads = mbr_decode(inf.dist);
  if (!is_tree(out.heads)) {
    out.heads = mst_decode(inf.dist.log_p);
    out.mst_fallback = true;
  }
  out.used_admm = inf.map.has_value();
  out.admm_converged = !inf.map || inf.map->converged;
  return out;
}

struct Model {
  Vocabulary vocab;
  ScorerParams params;
};

inline void check_compatible(const Model& model) {
  if (model.params.dims.words != model.vocab.word_count() || model.params.dims.tags != model.vocab.pos_count())
    throw ValidationError("model/vocabulary mismatch: checkpoint expects " + std::to_string(model.params.dims.words) +
                          " words and " + std::to_string(model.params.dims.tags) + " POS tags, vocabulary has " +
                          std::to_string(model.vocab.word_count()) + " and " +
                          std::to_string(model.vocab.pos_count()));
}

inline void save_model(const std::string& checkpoint_path, const std::string& vocab_path, const Model& model) {
  save_params(checkpoint_path, model.params);
  std::ofstream out(vocab_path);
  if (!out) throw Error("cannot open '" + vocab_path + "' for writing");
  model.vocab.save(out);
}

inline Model load_model(const std::string& checkpoint_path, const std::string& vocab_path) {
  Model m;
  m.params = load_params(checkpoint_path);
  std::ifstream in(vocab_path);
  if (!in) throw Error("cannot open '" + vocab_path + "'");
  m.vocab = Vocabulary::load(in, vocab_path);
  check_compatible(m);
  return m;
}

inline ParseResult parse_sentence(const Model& model, const Sentence& s, const InferenceOptions& options) {
  return decode(infer(s, model.vocab, model.params, options));
}

struct Evaluation {
  std::vector<std::vector<int>> heads;
  double uas = std::numeric_limits<double>::quiet_NaN();
  int mst_fallbacks = 0;
  int admm_runs = 0;
  int admm_converged = 0;
  bool all_trees = true;
};

// Parses every sentence (in parallel over `jobs` workers) and scores against
// the gold heads when the corpus is non-empty.
inline Evaluation parse_corpus(const Model& model, const std::vector<Sentence>& sentences,
                               const InferenceOptions& options, std::size_t jobs = 1) {
  std::vector<ParseResult> results(sentences.size());
  parallel_for(sentences.size(), jobs, [&](std::size_t k) { results[k] = parse_sentence(model, sentences[k], options); });
  Evaluation ev;
  for (auto& r : results) {
    ev.mst_fallbacks += r.mst_fallback;
    ev.admm_runs += r.used_admm;
    ev.admm_converged += r.used_admm && r.admm_converged;
    ev.all_trees = ev.all_trees && is_tree(r.heads);
    ev.heads.push_back(std::move(r.heads));
  }
  if (!sentences.empty()) ev.uas = corpus_uas(ev.heads, sentences);
  return ev;
}

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::kAdam;
  std::optional<double> learning_rate;  // default: 1e-3 adam, 1e-2 sgd
  int epochs = 10;
  int batch_size = 5;
  int max_len = 60;
  bool high_order = false;
  double beta = 1.0;
  AdmmConfig admm;
  FactorGraphOptions graph;
  std::uint64_t seed = 0;
  int warm_start_epochs = 0;
  int min_count = 1;
  ScorerDims dims;  // words/tags are filled from the vocabulary
  std::size_t jobs = 1;

  double lr() const {
    if (learning_rate) return *learning_rate;
    return optimizer == OptimizerKind::kAdam ? 1e-3 : 1e-2;
  }

  void validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(lr() > 0.0)) throw ConfigError("learning rate must be positive");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (max_len < 1) throw ConfigError("max_len must be >= 1");
    if (warm_start_epochs < 0) throw ConfigError("warm_start_epochs must be >= 0");
    admm.validate();
  }

  // Coupled (high-order) training starts after the warm-start epochs.
  bool high_order_active(int epoch) const { return high_order && epoch > warm_start_epochs; }

  InferenceOptions inference(int epoch) const {
    InferenceOptions o;
    o.high_order = high_order_active(epoch);
    o.beta = beta;
    o.admm = admm;
    o.graph = graph;
    return o;
  }
};

struct EpochStats {
  double mean_loss = 0.0;
  int sentences = 0;
  int admm_runs = 0;
  int admm_converged = 0;
};

// One pass over `batches`. `epoch` is 1-based and only decides whether the
// high-order path is active.
inline EpochStats train_epoch(const std::vector<Batch>& batches, const Vocabulary& vocab, ScorerParams& params,
                              Optimizer& optimizer, const TrainConfig& config, int epoch) {
  const InferenceOptions options = config.inference(epoch);
  EpochStats stats;
  double loss_sum = 0.0;
  for (const Batch& batch : batches) {
    const std::size_t count = batch.sentences.size();
    std::vector<double> losses(count);
    std::vector<ScorerParams> grads(count);
    std::vector<char> used_admm(count, 0), converged(count, 0);
    parallel_for(count, config.jobs, [&](std::size_t k) {
      const Sentence& s = batch.sentences[k];
      ForwardTape tape;
      const SentenceInference inf = infer(s, vocab, params, options, &tape);
      const LossResult loss = head_loss(inf.dist, s);
      losses[k] = loss.value;
      if (inf.map) {
        used_admm[k] = 1;
        converged[k] = inf.map->converged;
      }
      if (!std::isfinite(loss.value)) return;
      grads[k] = backward(loss.grad, tape, params);
    });
    ScorerParams total = params.zeros_like();
    for (std::size_t k = 0; k < count; ++k) {
      if (!std::isfinite(losses[k])) {
        std::string preview;
        for (int j = 0; j < std::min(5, batch.sentences[k].size()); ++j) preview += " " + batch.sentences[k].tokens[j];
        throw NumericError("non-finite loss on sentence \"" + preview.substr(1) + " ...\" (epoch " +
                           std::to_string(epoch) + ")");
      }
      total += grads[k];
      loss_sum += losses[k];
      stats.admm_runs += used_admm[k];
      stats.admm_converged += converged[k];
    }
    stats.sentences += static_cast<int>(count);
    optimizer.step(params, total);
  }
  if (!params.all_finite()) throw NumericError("parameters became non-finite in epoch " + std::to_string(epoch));
  stats.mean_loss = stats.sentences ? loss_sum / stats.sentences : 0.0;
  return stats;
}

struct TrainReport {
  std::vector<double> epoch_loss;
  std::vector<double> dev_uas;           // NaN without a dev set
  std::vector<double> admm_convergence;  // NaN when ADMM did not run
  double wall_seconds = 0.0;

  // Deterministic metrics (wall time excluded).
  void write_metrics_csv(std::ostream& out) const {
    out << "epoch,loss,dev_uas,admm_converged_rate\n";
    auto field = [](double v) {
      if (std::isnan(v)) return std::string();
      std::ostringstream s;
      s << std::setprecision(10) << v;
      return s.str();
    };
    for (std::size_t e = 0; e < epoch_loss.size(); ++e)
      out << (e + 1) << ',' << field(epoch_loss[e]) << ',' << field(dev_uas[e]) << ','
          << field(admm_convergence[e]) << '\n';
  }

  bool same_metrics(const TrainReport& o) const {
    auto eq = [](const std::vector<double>& a, const std::vector<double>& b) {
      if (a.size() != b.size()) return false;
      for (std::size_t k = 0; k < a.size(); ++k)
        if (!(a[k] == b[k] || (std::isnan(a[k]) && std::isnan(b[k])))) return false;
      return true;
    };
    return eq(epoch_loss, o.epoch_loss) && eq(dev_uas, o.dev_uas) && eq(admm_convergence, o.admm_convergence);
  }
};

using EpochCallback = std::function<void(int epoch, const Model&, const TrainReport&)>;

inline std::pair<Model, TrainReport> train(const std::vector<Sentence>& train_set, const std::vector<Sentence>& dev_set,
                                           const TrainConfig& config, const EpochCallback& on_epoch = {}) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  Model model;
  model.vocab = build_vocab(train_set, config.min_count);
  ScorerDims dims = config.dims;
  dims.words = model.vocab.word_count();
  dims.tags = model.vocab.pos_count();
  model.params = ScorerParams::random(dims, config.seed);
  Optimizer optimizer(config.optimizer, config.lr());

  TrainReport report;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto batches = make_batches(train_set, config.batch_size, config.max_len,
                                      config.seed * 1000003ULL + static_cast<std::uint64_t>(epoch));
    const EpochStats stats = train_epoch(batches, model.vocab, model.params, optimizer, config, epoch);
    report.epoch_loss.push_back(stats.mean_loss);
    report.admm_convergence.push_back(stats.admm_runs ? static_cast<double>(stats.admm_converged) / stats.admm_runs
                                                      : std::numeric_limits<double>::quiet_NaN());
    if (!dev_set.empty()) {
      report.dev_uas.push_back(parse_corpus(model, dev_set, config.inference(epoch), config.jobs).uas);
    } else {
      report.dev_uas.push_back(std::numeric_limits<double>::quiet_NaN());
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (on_epoch) on_epoch(epoch, model, report);
  }
  return {std::move(model), std::move(report)};
}

}  // namespace hodep

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

// First-order biaffine arc scorer.
//
//   x_i      = [word_emb(w_i); pos_emb(t_i)]                 i = 0..n, 0 = root
//   r_i      = encoder(x)_i                                  (bi-RNN, window or identity)
//   hd_i     = tanh(W_dep r_i + b_dep)                       arc-dep projection
//   hh_i     = tanh(W_head r_i + b_head)                     arc-head projection
//   s[i][j]  = hh_i . (U1 hd_j) + hh_i . u2                  head i, dependent j
//
// The bi-RNN is a single-layer Elman network in each direction:
//   f_t = tanh(A_f x_t + B_f f_{t-1} + c_f),  g_t = tanh(A_b x_t + B_b g_{t+1} + c_b),
//   r_t = [f_t; g_t].
// Gradients are computed by hand-written reverse mode over a recorded tape.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hodep/arc_scores.hpp"
#include "hodep/common.hpp"
#include "hodep/corpus.hpp"
#include "hodep/factor_graph.hpp"

namespace hodep {

enum class EncoderKind : std::int32_t {
  kBiRnn = 0,
  kWindow = 1,    // r_i = [x_{i-1}; x_i; x_{i+1}], zero padded
  kIdentity = 2,  // r_i = x_i, context free
};

struct ScorerDims {
  int words = 2;
  int tags = 2;
  int d_emb = 64;
  int d_pos = 16;
  int d_hidden = 64;  // per direction
  int d_arc = 64;
  EncoderKind encoder = EncoderKind::kBiRnn;

  int d_input() const { return d_emb + d_pos; }
  int d_repr() const {
    switch (encoder) {
      case EncoderKind::kBiRnn: return 2 * d_hidden;
      case EncoderKind::kWindow: return 3 * d_input();
      case EncoderKind::kIdentity: return d_input();
    }
    return 0;
  }

  void validate() const {
    if (words < 2 || tags < 2 || d_emb < 1 || d_pos < 1 || d_hidden < 1 || d_arc < 1)
      throw ConfigError("scorer: all dimensions must be positive (and vocabularies hold ROOT/UNK)");
  }

  bool operator==(const ScorerDims&) const = default;
};

// All parameter tensors. Biases are single-column matrices so every tensor
// can be visited uniformly (optimizers, checkpoints, gradient checks).
struct ScorerParams {
  ScorerDims dims;
  Matrix word_emb;  // words x d_emb
  Matrix pos_emb;   // tags x d_pos
  Matrix fwd_in, fwd_rec, fwd_bias;
  Matrix bwd_in, bwd_rec, bwd_bias;
  Matrix dep_w, dep_b;
  Matrix head_w, head_b;
  Matrix U1;  // d_arc x d_arc
  Matrix u2;  // d_arc x 1

  static ScorerParams zeros(const ScorerDims& dims) {
    dims.validate();
    ScorerParams p;
    p.dims = dims;
    const int h = dims.encoder == EncoderKind::kBiRnn ? dims.d_hidden : 0;
    p.word_emb = Matrix::Zero(dims.words, dims.d_emb);
    p.pos_emb = Matrix::Zero(dims.tags, dims.d_pos);
    p.fwd_in = Matrix::Zero(h, dims.d_input());
    p.fwd_rec = Matrix::Zero(h, h);
    p.fwd_bias = Matrix::Zero(h, 1);
    p.bwd_in = Matrix::Zero(h, dims.d_input());
    p.bwd_rec = Matrix::Zero(h, h);
    p.bwd_bias = Matrix::Zero(h, 1);
    p.dep_w = Matrix::Zero(dims.d_arc, dims.d_repr());
    p.dep_b = Matrix::Zero(dims.d_arc, 1);
    p.head_w = Matrix::Zero(dims.d_arc, dims.d_repr());
    p.head_b = Matrix::Zero(dims.d_arc, 1);
    p.U1 = Matrix::Zero(dims.d_arc, dims.d_arc);
    p.u2 = Matrix::Zero(dims.d_arc, 1);
    return p;
  }

  // Uniform in [-scale, scale] from a seeded mt19937_64.
  static ScorerParams random(const ScorerDims& dims, std::uint64_t seed, double scale = 0.1) {
    ScorerParams p = zeros(dims);
    std::mt19937_64 rng(seed);
    // Mapping raw 64-bit draws by hand keeps the values identical across
    // standard library implementations.
    auto draw = [&] { return scale * (2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0); };
    for (auto& [name, t] : p.tensors())
      for (Eigen::Index k = 0; k < t->size(); ++k) t->data()[k] = draw();
    return p;
  }

  ScorerParams zeros_like() const { return zeros(dims); }

  std::vector<std::pair<const char*, Matrix*>> tensors() {
    return {{"word_emb", &word_emb}, {"pos_emb", &pos_emb}, {"fwd_in", &fwd_in},   {"fwd_rec", &fwd_rec},
            {"fwd_bias", &fwd_bias}, {"bwd_in", &bwd_in},   {"bwd_rec", &bwd_rec}, {"bwd_bias", &bwd_bias},
            {"dep_w", &dep_w},       {"dep_b", &dep_b},     {"head_w", &head_w},   {"head_b", &head_b},
            {"U1", &U1},             {"u2", &u2}};
  }
  std::vector<std::pair<const char*, const Matrix*>> tensors() const {
    auto mut = const_cast<ScorerParams*>(this)->tensors();
    std::vector<std::pair<const char*, const Matrix*>> out;
    for (auto& [n, t] : mut) out.emplace_back(n, t);
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t total = 0;
    for (const auto& [n, t] : tensors()) total += static_cast<std::size_t>(t->size());
    return total;
  }

  ScorerParams& operator+=(const ScorerParams& other) {
    auto mine = tensors();
    auto theirs = other.tensors();
    for (std::size_t k = 0; k < mine.size(); ++k) *mine[k].second += *theirs[k].second;
    return *this;
  }

  bool all_finite() const {
    for (const auto& [n, t] : tensors())
      if (!t->allFinite()) return false;
    return true;
  }

  bool operator==(const ScorerParams& o) const {
    if (!(dims == o.dims)) return false;
    auto a = tensors();
    auto b = o.tensors();
    for (std::size_t k = 0; k < a.size(); ++k) {
      const Matrix& x = *a[k].second;
      const Matrix& y = *b[k].second;
      if (x.rows() != y.rows() || x.cols() != y.cols()) return false;
      if (x.size() && std::memcmp(x.data(), y.data(), sizeof(double) * x.size()) != 0) return false;
    }
    return true;
  }
};

// Token ids of one sentence, root included at position 0.
struct EncodedSentence {
  std::vector<int> word_ids;
  std::vector<int> pos_ids;

  int length() const { return static_cast<int>(word_ids.size()) - 1; }
};

inline EncodedSentence encode_ids(const Sentence& s, const Vocabulary& vocab) {
  EncodedSentence e;
  e.word_ids.push_back(Vocabulary::kRoot);
  e.pos_ids.push_back(Vocabulary::kRoot);
  for (int j = 0; j < s.size(); ++j) {
    e.word_ids.push_back(vocab.word_id(s.tokens[j]));
    e.pos_ids.push_back(vocab.pos_id(s.pos_tags[j]));
  }
  return e;
}

// Intermediates of one forward pass, consumed by backward().
struct ForwardTape {
  EncodedSentence ids;
  Matrix x;       // d_in x (n+1)
  Matrix f, g;    // d_hidden x (n+1), bi-RNN only
  Matrix r;       // d_repr x (n+1)
  Matrix hd, hh;  // d_arc x (n+1)
  Matrix a;       // d_arc x n: U1 hd_j + u2 for dependents 1..n
};

inline void check_ids(const EncodedSentence& ids, const ScorerParams& p) {
  if (ids.word_ids.size() != ids.pos_ids.size() || ids.word_ids.size() < 2)
    throw ConfigError("scorer: malformed encoded sentence");
  for (int w : ids.word_ids)
    if (w < 0 || w >= p.word_emb.rows()) throw ConfigError("scorer: word id out of range for embedding table");
  for (int t : ids.pos_ids)
    if (t < 0 || t >= p.pos_emb.rows()) throw ConfigError("scorer: POS id out of range for embedding table");
}

inline void check_shapes(const ScorerParams& p) {
  const ScorerParams ref = ScorerParams::zeros(p.dims);
  auto want = ref.tensors();
  auto have = p.tensors();
  for (std::size_t k = 0; k < want.size(); ++k) {
    if (want[k].second->rows() != have[k].second->rows() || want[k].second->cols() != have[k].second->cols())
      throw ConfigError(std::string("scorer: tensor '") + want[k].first + "' has shape " +
                        std::to_string(have[k].second->rows()) + "x" + std::to_string(have[k].second->cols()) +
                        ", expected " + std::to_string(want[k].second->rows()) + "x" +
                        std::to_string(want[k].second->cols()));
  }
}

// Produces r_0..r_n (columns of the returned tape's r).
inline ForwardTape encode(const EncodedSentence& ids, const ScorerParams& p) {
  check_shapes(p);
  check_ids(ids, p);
  const ScorerDims& d = p.dims;
  const int m = static_cast<int>(ids.word_ids.size());
  ForwardTape tape;
  tape.ids = ids;
  tape.x.resize(d.d_input(), m);
  for (int t = 0; t < m; ++t) {
    tape.x.col(t).head(d.d_emb) = p.word_emb.row(ids.word_ids[t]).transpose();
    tape.x.col(t).tail(d.d_pos) = p.pos_emb.row(ids.pos_ids[t]).transpose();
  }
  switch (d.encoder) {
    case EncoderKind::kIdentity:
      tape.r = tape.x;
      break;
    case EncoderKind::kWindow: {
      const int din = d.d_input();
      tape.r = Matrix::Zero(3 * din, m);
      for (int t = 0; t < m; ++t) {
        if (t > 0) tape.r.col(t).segment(0, din) = tape.x.col(t - 1);
        tape.r.col(t).segment(din, din) = tape.x.col(t);
        if (t + 1 < m) tape.r.col(t).segment(2 * din, din) = tape.x.col(t + 1);
      }
      break;
    }
    case EncoderKind::kBiRnn: {
      const int h = d.d_hidden;
      tape.f.resize(h, m);
      tape.g.resize(h, m);
      const Matrix in_f = p.fwd_in * tape.x;
      const Matrix in_b = p.bwd_in * tape.x;
      for (int t = 0; t < m; ++t) {
        Vector pre = in_f.col(t) + p.fwd_bias.col(0);
        if (t > 0) pre += p.fwd_rec * tape.f.col(t - 1);
        tape.f.col(t) = pre.array().tanh();
      }
      for (int t = m - 1; t >= 0; --t) {
        Vector pre = in_b.col(t) + p.bwd_bias.col(0);
        if (t + 1 < m) pre += p.bwd_rec * tape.g.col(t + 1);
        tape.g.col(t) = pre.array().tanh();
      }
      tape.r.resize(2 * h, m);
      tape.r.topRows(h) = tape.f;
      tape.r.bottomRows(h) = tape.g;
      break;
    }
  }
  return tape;
}

inline ForwardTape encode(const Sentence& s, const Vocabulary& vocab, const ScorerParams& p) {
  return encode(encode_ids(s, vocab), p);
}

// Completes the tape with the MLP projections and returns the biaffine
// scores. Self-arcs are masked.
inline ArcScoreTable arc_scores(ForwardTape& tape, const ScorerParams& p) {
  const int m = static_cast<int>(tape.r.cols());
  const int n = m - 1;
  tape.hd = ((p.dep_w * tape.r).colwise() + p.dep_b.col(0)).array().tanh();
  tape.hh = ((p.head_w * tape.r).colwise() + p.head_b.col(0)).array().tanh();
  tape.a = (p.U1 * tape.hd.rightCols(n)).colwise() + p.u2.col(0);
  return ArcScoreTable(Matrix(tape.hh.transpose() * tape.a));
}

// s[i][j] = hh_i . (U1 hd_j) + hh_i . u2 for head columns hh and dependent
// columns hd.
inline Matrix biaffine(const Matrix& hh, const Matrix& hd, const Matrix& U1, const Matrix& u2) {
  return hh.transpose() * ((U1 * hd).colwise() + u2.col(0));
}

inline ArcScoreTable score_sentence(const Sentence& s, const Vocabulary& vocab, const ScorerParams& p,
                                    ForwardTape* tape_out = nullptr) {
  ForwardTape tape = encode(s, vocab, p);
  ArcScoreTable scores = arc_scores(tape, p);
  if (tape_out) *tape_out = std::move(tape);
  return scores;
}

// Reverse pass. `upstream` is dL/ds with the same (n+1) x n layout as the
// score table; entries on masked self-arcs are ignored. Returns dL/dparams.
inline ScorerParams backward(const Matrix& upstream, const ForwardTape& tape, const ScorerParams& p) {
  const int m = static_cast<int>(tape.r.cols());
  const int n = m - 1;
  if (upstream.rows() != m || upstream.cols() != n)
    throw ValidationError("scorer backward: gradient shape " + std::to_string(upstream.rows()) + "x" +
                          std::to_string(upstream.cols()) + " does not match score table " + std::to_string(m) +
                          "x" + std::to_string(n));
  const ScorerDims& d = p.dims;
  ScorerParams grad = p.zeros_like();

  Matrix G = upstream;
  for (int j = 1; j <= n; ++j) G(j, j - 1) = 0.0;

  // s = hh^T a, a = U1 hd_dep + u2
  const Matrix d_hh = tape.a * G.transpose();  // d_arc x m
  const Matrix d_a = tape.hh * G;              // d_arc x n
  grad.U1 = d_a * tape.hd.rightCols(n).transpose();
  grad.u2 = d_a.rowwise().sum();
  Matrix d_hd = Matrix::Zero(d.d_arc, m);
  d_hd.rightCols(n) = p.U1.transpose() * d_a;

  const Matrix z_hd = d_hd.array() * (1.0 - tape.hd.array().square());
  const Matrix z_hh = d_hh.array() * (1.0 - tape.hh.array().square());
  grad.dep_w = z_hd * tape.r.transpose();
  grad.dep_b = z_hd.rowwise().sum();
  grad.head_w = z_hh * tape.r.transpose();
  grad.head_b = z_hh.rowwise().sum();
  const Matrix d_r = p.dep_w.transpose() * z_hd + p.head_w.transpose() * z_hh;

  Matrix d_x;
  switch (d.encoder) {
    case EncoderKind::kIdentity:
      d_x = d_r;
      break;
    case EncoderKind::kWindow: {
      const int din = d.d_input();
      d_x = Matrix::Zero(din, m);
      for (int t = 0; t < m; ++t) {
        if (t > 0) d_x.col(t - 1) += d_r.col(t).segment(0, din);
        d_x.col(t) += d_r.col(t).segment(din, din);
        if (t + 1 < m) d_x.col(t + 1) += d_r.col(t).segment(2 * din, din);
      }
      break;
    }
    case EncoderKind::kBiRnn: {
      const int h = d.d_hidden;
      Matrix d_pre_f(h, m), d_pre_b(h, m);
      Vector carry = Vector::Zero(h);
      for (int t = m - 1; t >= 0; --t) {
        const Vector df = d_r.col(t).head(h) + carry;
        d_pre_f.col(t) = df.array() * (1.0 - tape.f.col(t).array().square());
        carry = p.fwd_rec.transpose() * d_pre_f.col(t);
      }
      carry.setZero();
      for (int t = 0; t < m; ++t) {
        const Vector dg = d_r.col(t).tail(h) + carry;
        d_pre_b.col(t) = dg.array() * (1.0 - tape.g.col(t).array().square());
        carry = p.bwd_rec.transpose() * d_pre_b.col(t);
      }
      grad.fwd_in = d_pre_f * tape.x.transpose();
      grad.bwd_in = d_pre_b * tape.x.transpose();
      grad.fwd_bias = d_pre_f.rowwise().sum();
      grad.bwd_bias = d_pre_b.rowwise().sum();
      if (m > 1) {
        grad.fwd_rec = d_pre_f.rightCols(m - 1) * tape.f.leftCols(m - 1).transpose();
        grad.bwd_rec = d_pre_b.leftCols(m - 1) * tape.g.rightCols(m - 1).transpose();
      }
      d_x = p.fwd_in.transpose() * d_pre_f + p.bwd_in.transpose() * d_pre_b;
      break;
    }
  }
  for (int t = 0; t < m; ++t) {
    grad.word_emb.row(tape.ids.word_ids[t]) += d_x.col(t).head(d.d_emb).transpose();
    grad.pos_emb.row(tape.ids.pos_ids[t]) += d_x.col(t).tail(d.d_pos).transpose();
  }
  return grad;
}

// Exponentiated scores transferred into the graphical model:
//   psi(k) = exp(s_{i(k) j(k)}),   psi(k, k') = psi(k) + psi(k')
// Scores are clamped to [-30, 30] before exponentiation.
class PotentialTable {
 public:
  static constexpr double kClamp = 30.0;

  static double potential(double score) { return std::exp(std::clamp(score, -kClamp, kClamp)); }

  static PotentialTable build(const ArcScoreTable& scores, const FactorGraph& graph) {
    PotentialTable t;
    for (const ArcId& a : graph.arcs()) {
      if (a.head < 0 || a.head > scores.size() || a.dep < 1 || a.dep > scores.size())
        throw LookupError("potentials: arc " + to_string(a) + " outside the score table");
      if (scores.is_masked(a.head, a.dep))
        throw Error("potentials: factor graph references masked self-arc " + to_string(a));
      t.unary_.emplace(a, potential(scores(a.head, a.dep)));
    }
    return t;
  }

  double unary(const ArcId& a) const {
    const auto it = unary_.find(a);
    if (it == unary_.end()) throw LookupError("potentials: no potential for arc " + to_string(a));
    return it->second;
  }

  double pair(const ArcId& a, const ArcId& b) const { return unary(a) + unary(b); }

  const std::map<ArcId, double>& unaries() const { return unary_; }

 private:
  std::map<ArcId, double> unary_;
};

inline PotentialTable potentials(const ArcScoreTable& scores, const FactorGraph& graph) {
  return PotentialTable::build(scores, graph);
}

// Checkpoint container "hodep-model v1": magic line, dimensions, then every
// tensor as (name, rows, cols, raw little-endian doubles).
inline constexpr const char* kModelMagic = "hodep-model v1";

namespace detail {

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& what) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ValidationError("checkpoint truncated reading " + what);
  return v;
}

}  // namespace detail

inline void save_params(std::ostream& out, const ScorerParams& p) {
  out << kModelMagic << '\n';
  const ScorerDims& d = p.dims;
  for (std::int32_t v : {d.words, d.tags, d.d_emb, d.d_pos, d.d_hidden, d.d_arc, static_cast<std::int32_t>(d.encoder)})
    detail::write_pod(out, v);
  const auto tensors = p.tensors();
  detail::write_pod(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    const std::string nm(name);
    detail::write_pod(out, static_cast<std::uint32_t>(nm.size()));
    out.write(nm.data(), static_cast<std::streamsize>(nm.size()));
    detail::write_pod(out, static_cast<std::uint32_t>(t->rows()));
    detail::write_pod(out, static_cast<std::uint32_t>(t->cols()));
    out.write(reinterpret_cast<const char*>(t->data()), static_cast<std::streamsize>(sizeof(double) * t->size()));
  }
  if (!out) throw Error("failed writing checkpoint");
}

inline ScorerParams load_params(std::istream& in) {
  std::string magic;
  if (!std::getline(in, magic) || magic != kModelMagic)
    throw ValidationError("not a '" + std::string(kModelMagic) + "' checkpoint");
  ScorerDims d;
  d.words = detail::read_pod<std::int32_t>(in, "dims");
  d.tags = detail::read_pod<std::int32_t>(in, "dims");
  d.d_emb = detail::read_pod<std::int32_t>(in, "dims");
  d.d_pos = detail::read_pod<std::int32_t>(in, "dims");
  d.d_hidden = detail::read_pod<std::int32_t>(in, "dims");
  d.d_arc = detail::read_pod<std::int32_t>(in, "dims");
  const auto enc = detail::read_pod<std::int32_t>(in, "dims");
  if (enc < 0 || enc > 2) throw ValidationError("checkpoint: unknown encoder kind");
  d.encoder = static_cast<EncoderKind>(enc);
  d.validate();
  ScorerParams p = ScorerParams::zeros(d);
  auto tensors = p.tensors();
  const auto count = detail::read_pod<std::uint32_t>(in, "tensor count");
  if (count != tensors.size()) throw ValidationError("checkpoint: unexpected tensor count");
  for (auto& [name, t] : tensors) {
    const auto len = detail::read_pod<std::uint32_t>(in, "name length");
    if (len > 256) throw ValidationError("checkpoint: corrupt tensor name");
    std::string nm(len, '\0');
    if (!in.read(nm.data(), len)) throw ValidationError("checkpoint truncated reading tensor name");
    if (nm != name) throw ValidationError("checkpoint: expected tensor '" + std::string(name) + "', found '" + nm + "'");
    const auto rows = detail::read_pod<std::uint32_t>(in, nm);
    const auto cols = detail::read_pod<std::uint32_t>(in, nm);
    if (rows != t->rows() || cols != t->cols())
      throw ValidationError("checkpoint: tensor '" + nm + "' has shape " + std::to_string(rows) + "x" +
                            std::to_string(cols) + ", expected " + std::to_string(t->rows()) + "x" +
                            std::to_string(t->cols()));
    if (!in.read(reinterpret_cast<char*>(t->data()), static_cast<std::streamsize>(sizeof(double) * t->size())))
      throw ValidationError("checkpoint truncated reading tensor '" + nm + "'");
  }
  return p;
}

inline void save_params(const std::string& path, const ScorerParams& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  save_params(out, p);
}

inline ScorerParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return load_params(in);
}

}  // namespace hodep

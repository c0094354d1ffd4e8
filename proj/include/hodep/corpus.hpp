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

// CoNLL-U ingestion, vocabularies and length-filtered batching.
//
// Only four columns matter here: ID (1), FORM (2), UPOS (4) and HEAD (7).
// Multiword-token ranges ("3-4") and empty nodes ("5.1") are skipped.

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hodep/common.hpp"
#include "hodep/tree.hpp"

namespace hodep {

struct Sentence {
  std::vector<std::string> tokens;
  std::vector<std::string> pos_tags;
  std::vector<int> gold_heads;  // gold_heads[j-1] = head of token j, 0 = root

  int size() const { return static_cast<int>(tokens.size()); }

  bool operator==(const Sentence&) const = default;
};

// Throws ValidationError unless the sentence satisfies the structural
// invariants: equal non-zero lengths, heads in range, rooted tree.
inline void validate_sentence(const Sentence& s, const std::string& where = "sentence") {
  const std::size_t n = s.tokens.size();
  if (n == 0) throw ValidationError(where + ": empty sentence");
  if (s.pos_tags.size() != n || s.gold_heads.size() != n)
    throw ValidationError(where + ": tokens/pos/heads length mismatch");
  for (std::size_t j = 0; j < n; ++j) {
    const int h = s.gold_heads[j];
    if (h < 0 || h > static_cast<int>(n))
      throw ValidationError(where + ": head " + std::to_string(h) + " of token " +
                            std::to_string(j + 1) + " out of range");
    if (h == static_cast<int>(j + 1))
      throw ValidationError(where + ": token " + std::to_string(j + 1) + " is its own head");
  }
  if (!is_tree(s.gold_heads)) throw ValidationError(where + ": gold heads are not a rooted tree");
}

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

inline std::optional<int> parse_int(std::string_view text) {
  if (text.empty()) return std::nullopt;
  int value = 0;
  for (char c : text) {
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + (c - '0');
    if (value > 1'000'000) return std::nullopt;
  }
  return value;
}

}  // namespace detail

inline std::vector<Sentence> read_conllu(std::istream& in, const std::string& source = "<stream>") {
  std::vector<Sentence> out;
  Sentence current;
  std::size_t block_start = 0;
  std::size_t lineno = 0;
  std::string line;

  auto flush = [&] {
    if (current.tokens.empty()) return;
    validate_sentence(current, source + ":" + std::to_string(block_start));
    out.push_back(std::move(current));
    current = Sentence{};
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line.front() == '#') continue;
    const auto cols = detail::split_tabs(line);
    if (cols.size() != 10)
      throw ParseError(source, lineno,
                       "expected 10 tab-separated columns, found " + std::to_string(cols.size()));
    const std::string_view id = cols[0];
    if (id.find('-') != std::string_view::npos || id.find('.') != std::string_view::npos) continue;
    const auto position = detail::parse_int(id);
    if (!position) throw ParseError(source, lineno, "non-integer token id '" + std::string(id) + "'");
    if (current.tokens.empty()) block_start = lineno;
    if (*position != current.size() + 1)
      throw ParseError(source, lineno, "token id " + std::to_string(*position) + " out of sequence");
    const auto head = detail::parse_int(cols[6]);
    if (!head) throw ParseError(source, lineno, "non-integer head '" + std::string(cols[6]) + "'");
    current.tokens.emplace_back(cols[1]);
    current.pos_tags.emplace_back(cols[3]);
    current.gold_heads.push_back(*head);
  }
  flush();
  return out;
}

inline std::vector<Sentence> load_conllu(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_conllu(in, path);
}

// Writes sentences as CoNLL-U. When `heads` is given it replaces the gold
// heads in column 7 (used for parser output); labels are always "_".
inline void write_conllu(std::ostream& out, const std::vector<Sentence>& sentences,
                         const std::vector<std::vector<int>>* heads = nullptr) {
  for (std::size_t k = 0; k < sentences.size(); ++k) {
    const Sentence& s = sentences[k];
    const std::vector<int>& h = heads ? (*heads)[k] : s.gold_heads;
    for (int j = 0; j < s.size(); ++j) {
      out << (j + 1) << '\t' << s.tokens[j] << "\t_\t" << s.pos_tags[j] << "\t_\t_\t" << h[j]
          << "\t_\t_\t_\n";
    }
    out << '\n';
  }
}

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

class Vocabulary {
 public:
  static constexpr int kRoot = 0;
  static constexpr int kUnk = 1;
  static constexpr const char* kRootString = "<root>";
  static constexpr const char* kUnkString = "<unk>";
  static constexpr const char* kHeader = "hodep-vocab v1";

  Vocabulary() {
    words_ = {kRootString, kUnkString};
    tags_ = {kRootString, kUnkString};
    reindex();
  }

  // Words (lowercased) with corpus frequency below min_count map to UNK.
  // Ordering is frequency-descending then lexicographic, so rebuilding from
  // the same corpus is byte-identical.
  static Vocabulary build(const std::vector<Sentence>& sentences, int min_count) {
    if (min_count < 1) throw ConfigError("min_count must be >= 1");
    if (sentences.empty()) throw ValidationError("cannot build a vocabulary from an empty corpus");
    std::map<std::string, long> word_counts, tag_counts;
    for (const auto& s : sentences) {
      for (const auto& w : s.tokens) ++word_counts[lowercase(w)];
      for (const auto& t : s.pos_tags) ++tag_counts[t];
    }
    Vocabulary v;
    for (auto& w : sorted_by_frequency(word_counts, min_count)) v.words_.push_back(std::move(w));
    for (auto& t : sorted_by_frequency(tag_counts, 1)) v.tags_.push_back(std::move(t));
    v.reindex();
    return v;
  }

  int word_id(std::string_view word) const {
    const auto it = word_to_id_.find(lowercase(word));
    return it == word_to_id_.end() ? kUnk : it->second;
  }
  int pos_id(std::string_view tag) const {
    const auto it = pos_to_id_.find(std::string(tag));
    return it == pos_to_id_.end() ? kUnk : it->second;
  }
  int word_count() const { return static_cast<int>(words_.size()); }
  int pos_count() const { return static_cast<int>(tags_.size()); }
  const std::string& word(int id) const { return words_.at(id); }
  const std::string& pos(int id) const { return tags_.at(id); }

  void save(std::ostream& out) const {
    out << kHeader << '\n';
    out << "words\t" << words_.size() << '\n';
    for (std::size_t i = 0; i < words_.size(); ++i) out << i << '\t' << words_[i] << '\n';
    out << "pos\t" << tags_.size() << '\n';
    for (std::size_t i = 0; i < tags_.size(); ++i) out << i << '\t' << tags_[i] << '\n';
  }

  static Vocabulary load(std::istream& in, const std::string& source = "<vocab>") {
    std::string line;
    std::size_t lineno = 0;
    auto next = [&]() -> std::string& {
      if (!std::getline(in, line)) throw ParseError(source, lineno + 1, "unexpected end of file");
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    };
    if (next() != kHeader) throw ParseError(source, lineno, "missing '" + std::string(kHeader) + "' header");
    Vocabulary v;
    v.words_ = read_section(next, "words", source, lineno);
    v.tags_ = read_section(next, "pos", source, lineno);
    if (v.words_.size() < 2 || v.words_[kRoot] != kRootString || v.words_[kUnk] != kUnkString ||
        v.tags_.size() < 2 || v.tags_[kRoot] != kRootString || v.tags_[kUnk] != kUnkString)
      throw ValidationError(source + ": reserved ROOT/UNK entries missing");
    v.reindex();
    return v;
  }

  bool operator==(const Vocabulary& o) const { return words_ == o.words_ && tags_ == o.tags_; }

 private:
  static std::vector<std::string> sorted_by_frequency(const std::map<std::string, long>& counts,
                                                      int min_count) {
    std::vector<std::pair<std::string, long>> items;
    for (const auto& [k, c] : counts)
      if (c >= min_count && k != kRootString && k != kUnkString) items.emplace_back(k, c);
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    std::vector<std::string> out;
    out.reserve(items.size());
    for (auto& [k, c] : items) out.push_back(std::move(k));
    return out;
  }

  template <typename Next>
  static std::vector<std::string> read_section(Next& next, const std::string& name,
                                               const std::string& source, std::size_t& lineno) {
    const auto header = detail::split_tabs(next());
    std::optional<int> count;
    if (header.size() == 2 && header[0] == name) count = detail::parse_int(header[1]);
    if (!count) throw ParseError(source, lineno, "expected '" + name + "<TAB>count'");
    std::vector<std::string> out;
    for (int i = 0; i < *count; ++i) {
      const auto cols = detail::split_tabs(next());
      if (cols.size() != 2 || detail::parse_int(cols[0]) != i)
        throw ParseError(source, lineno, "expected '" + std::to_string(i) + "<TAB>string'");
      out.emplace_back(cols[1]);
    }
    return out;
  }

  void reindex() {
    word_to_id_.clear();
    pos_to_id_.clear();
    for (std::size_t i = 0; i < words_.size(); ++i) word_to_id_.emplace(words_[i], static_cast<int>(i));
    for (std::size_t i = 0; i < tags_.size(); ++i) pos_to_id_.emplace(tags_[i], static_cast<int>(i));
  }

  std::vector<std::string> words_;
  std::vector<std::string> tags_;
  std::unordered_map<std::string, int> word_to_id_;
  std::unordered_map<std::string, int> pos_to_id_;
};

inline Vocabulary build_vocab(const std::vector<Sentence>& sentences, int min_count) {
  return Vocabulary::build(sentences, min_count);
}

struct Batch {
  std::vector<Sentence> sentences;
  int max_len = 0;
};

// Deterministic Fisher-Yates over a seeded mt19937_64; std::shuffle's
// sequence is implementation-defined.
inline void seeded_shuffle(std::vector<std::size_t>& items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(items[i - 1], items[j]);
  }
}

inline std::vector<Batch> make_batches(const std::vector<Sentence>& sentences, int batch_size,
                                       int max_len, std::optional<std::uint64_t> shuffle_seed = {}) {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < sentences.size(); ++i)
    if (sentences[i].size() <= max_len) keep.push_back(i);
  if (shuffle_seed) seeded_shuffle(keep, *shuffle_seed);
  std::vector<Batch> out;
  for (std::size_t start = 0; start < keep.size(); start += batch_size) {
    Batch b;
    b.max_len = max_len;
    const std::size_t stop = std::min(keep.size(), start + static_cast<std::size_t>(batch_size));
    for (std::size_t k = start; k < stop; ++k) b.sentences.push_back(sentences[keep[k]]);
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace hodep

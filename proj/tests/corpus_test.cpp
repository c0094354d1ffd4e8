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

#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "hodep/corpus.hpp"
#include "hodep/tree.hpp"
#include "support/synthetic_treebank.hpp"

namespace hodep {
namespace {

std::vector<Sentence> parse(const std::string& text) {
  std::istringstream in(text);
  return read_conllu(in, "test");
}

std::string row(int id, const std::string& form, const std::string& upos, int head) {
  return std::to_string(id) + "\t" + form + "\t_\t" + upos + "\tXP\t_\t" + std::to_string(head) + "\tdep\t_\t_\n";
}

TEST(ConlluTest, ExtractsFormUposAndHead) {
  const auto sents = parse("# sent_id = 1\n" + row(1, "Dogs", "NOUN", 2) + row(2, "bark", "VERB", 0) + "\n");
  ASSERT_EQ(sents.size(), 1u);
  EXPECT_EQ(sents[0].tokens, (std::vector<std::string>{"Dogs", "bark"}));
  EXPECT_EQ(sents[0].pos_tags, (std::vector<std::string>{"NOUN", "VERB"}));
  EXPECT_EQ(sents[0].gold_heads, (std::vector<int>{2, 0}));
}

TEST(ConlluTest, EmptyInputYieldsNothing) { EXPECT_TRUE(parse("").empty()); }

TEST(ConlluTest, SkipsMultiwordAndEmptyNodesAndToleratesCrlf) {
  std::string text = "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\r\n";
  text += "1\tdo\t_\tAUX\t_\t_\t3\taux\t_\t_\r\n";
  text += "2\tn't\t_\tPART\t_\t_\t3\tadvmod\t_\t_\r\n";
  text += "2.1\tghost\t_\tNOUN\t_\t_\t_\t_\t_\t_\r\n";
  text += "3\tgo\t_\tVERB\t_\t_\t0\troot\t_\t_\r\n\r\n";
  const auto sents = parse(text);
  ASSERT_EQ(sents.size(), 1u);
  EXPECT_EQ(sents[0].size(), 3);
  EXPECT_EQ(sents[0].tokens[1], "n't");
  EXPECT_EQ(sents[0].gold_heads, (std::vector<int>{3, 3, 0}));
}

TEST(ConlluTest, MultipleBlocksWithoutTrailingBlankLine) {
  const auto sents = parse(row(1, "Hi", "INTJ", 0) + "\n" + row(1, "Go", "VERB", 0) + row(2, "now", "ADV", 1));
  ASSERT_EQ(sents.size(), 2u);
  EXPECT_EQ(sents[1].size(), 2);
}

TEST(ConlluTest, WrongColumnCountNamesLine) {
  try {
    parse(row(1, "a", "X", 0) + "2\tb\t_\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(ConlluTest, NonIntegerHeadIsParseError) {
  EXPECT_THROW(parse("1\ta\t_\tX\t_\t_\tzero\t_\t_\t_\n"), ParseError);
}

TEST(ConlluTest, HeadOutOfRangeIsValidationError) {
  EXPECT_THROW(parse(row(1, "a", "X", 0) + row(2, "b", "X", 7)), ValidationError);
}

TEST(ConlluTest, CyclicGoldIsValidationError) {
  EXPECT_THROW(parse(row(1, "a", "X", 2) + row(2, "b", "X", 1)), ValidationError);
  EXPECT_THROW(parse(row(1, "a", "X", 1)), ValidationError);
}

TEST(ConlluTest, LongSentenceLoadsWithFullLength) {
  std::string text;
  for (int j = 1; j <= 71; ++j) text += row(j, "w" + std::to_string(j), "NOUN", j == 1 ? 0 : 1);
  const auto sents = parse(text + "\n");
  ASSERT_EQ(sents.size(), 1u);
  EXPECT_EQ(sents[0].size(), 71);
}

TEST(ConlluTest, RoundTripPreservesSentences) {
  const auto original = testing::synthetic_treebank(40, 3);
  std::ostringstream out;
  write_conllu(out, original);
  EXPECT_EQ(parse(out.str()), original);
  for (const auto& s : parse(out.str())) EXPECT_TRUE(is_tree(s.gold_heads));
}

TEST(TreeTest, RecognizesArborescences) {
  EXPECT_TRUE(is_tree(std::vector<int>{0}));
  EXPECT_FALSE(is_tree(std::vector<int>{2, 1}));
  EXPECT_TRUE(is_tree(std::vector<int>{0, 1, 2}));
  EXPECT_FALSE(is_tree(std::vector<int>{0, 3, 2}));
  EXPECT_FALSE(is_tree(std::vector<int>{0, 5}));
  EXPECT_TRUE(is_tree(std::vector<int>{2, 0, 2}));
  EXPECT_TRUE(is_tree(std::vector<int>{0, 0}));
}

Sentence words(std::vector<std::string> toks) {
  Sentence s;
  s.tokens = toks;
  s.pos_tags.assign(toks.size(), "X");
  s.gold_heads.assign(toks.size(), 0);
  return s;
}

TEST(VocabularyTest, MinCountThreshold) {
  const Vocabulary v = build_vocab({words({"a", "a", "b"})}, 2);
  EXPECT_NE(v.word_id("a"), Vocabulary::kUnk);
  EXPECT_EQ(v.word_id("b"), Vocabulary::kUnk);
  EXPECT_EQ(v.word_count(), 3);
}

TEST(VocabularyTest, MinCountOneKeepsEveryWordAndLowercases) {
  const Vocabulary v = build_vocab({words({"The", "cat", "the"})}, 1);
  EXPECT_EQ(v.word_count(), 4);
  EXPECT_EQ(v.word_id("THE"), v.word_id("the"));
  EXPECT_EQ(v.word(v.word_id("the")), "the");  // most frequent first
  EXPECT_EQ(v.word_id("the"), 2);
  EXPECT_NE(v.word_id("cat"), Vocabulary::kUnk);
  EXPECT_EQ(v.word_id("unseen"), Vocabulary::kUnk);
}

TEST(VocabularyTest, DeterministicSerializationAndRoundTrip) {
  const auto corpus = testing::synthetic_treebank(30, 5);
  std::ostringstream a, b;
  build_vocab(corpus, 1).save(a);
  build_vocab(corpus, 1).save(b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().rfind("hodep-vocab v1\n", 0), 0u);
  std::istringstream in(a.str());
  const Vocabulary loaded = Vocabulary::load(in);
  EXPECT_EQ(loaded, build_vocab(corpus, 1));
  EXPECT_EQ(loaded.word_id("<root>"), Vocabulary::kRoot);
  EXPECT_EQ(loaded.pos_id("<unk>"), Vocabulary::kUnk);
}

TEST(VocabularyTest, Errors) {
  EXPECT_THROW(build_vocab({}, 1), ValidationError);
  EXPECT_THROW(build_vocab({words({"a"})}, 0), ConfigError);
  std::istringstream bad("not a vocab\n");
  EXPECT_THROW(Vocabulary::load(bad), ParseError);
}

std::vector<Sentence> of_lengths(std::vector<int> lengths) {
  std::vector<Sentence> out;
  for (int n : lengths) out.push_back(words(std::vector<std::string>(n, "w")));
  return out;
}

TEST(BatchTest, SplitsIntoFullAndRemainder) {
  const auto b = make_batches(of_lengths({1, 2, 3, 4, 5, 6, 7}), 5, 60);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b[0].sentences.size(), 5u);
  EXPECT_EQ(b[1].sentences.size(), 2u);
}

TEST(BatchTest, FiltersByMaxLenWithoutMutating) {
  const auto corpus = of_lengths({20, 40, 10});
  const auto b = make_batches(corpus, 5, 20);
  ASSERT_EQ(b.size(), 1u);
  ASSERT_EQ(b[0].sentences.size(), 2u);
  for (const auto& s : b[0].sentences) EXPECT_LE(s.size(), 20);
  EXPECT_EQ(b[0].sentences[0], corpus[0]);
  EXPECT_TRUE(make_batches(corpus, 5, 5).empty());
  EXPECT_THROW(make_batches(corpus, 0, 5), ConfigError);
}

TEST(BatchTest, SeededShuffleIsDeterministicPermutation) {
  std::vector<int> lengths;
  for (int k = 1; k <= 23; ++k) lengths.push_back(k);
  const auto corpus = of_lengths(lengths);
  auto flatten = [](const std::vector<Batch>& bs) {
    std::vector<int> out;
    for (const auto& b : bs)
      for (const auto& s : b.sentences) out.push_back(s.size());
    return out;
  };
  const auto a = flatten(make_batches(corpus, 4, 60, 9));
  EXPECT_EQ(a, flatten(make_batches(corpus, 4, 60, 9)));
  EXPECT_NE(a, flatten(make_batches(corpus, 4, 60, 10)));
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, lengths);
}

}  // namespace
}  // namespace hodep

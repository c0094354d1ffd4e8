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

#include <cmath>
#include <limits>

#include "hodep/decoder.hpp"
#include "hodep/oracle.hpp"
#include "hodep/tree.hpp"
#include "hodep/verify.hpp"

namespace hodep {
namespace {

TEST(HeadDistributionTest, BetaZeroIsPlainSoftmax) {
  verify::Rng rng(1);
  const ArcScoreTable s = verify::random_scores(4, rng, -2, 2);
  MapResult consensus = run_admm(FactorGraph::build(s));
  const HeadDistribution a = head_distribution(s);
  const HeadDistribution b = head_distribution(s, &consensus, 0.0);
  EXPECT_TRUE(a.p.isApprox(b.p, 0.0));
  for (int j = 1; j <= 4; ++j) {
    double z = 0.0;
    for (int i = 0; i <= 4; ++i)
      if (i != j) z += std::exp(s(i, j));
    EXPECT_NEAR(a(0, j), std::exp(s(0, j)) / z, 1e-14);
    EXPECT_NEAR(a.p.col(j - 1).sum(), 1.0, 1e-14);
    EXPECT_EQ(a(j, j), 0.0);
  }
}

TEST(HeadDistributionTest, EqualScoresSplitEvenly) {
  const HeadDistribution d = head_distribution(ArcScoreTable(1));
  EXPECT_DOUBLE_EQ(d(0, 1), 1.0);
  const HeadDistribution e = head_distribution(ArcScoreTable(2));
  EXPECT_DOUBLE_EQ(e(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(e(2, 1), 0.5);
}

TEST(HeadDistributionTest, ConsensusRaisesCoveredArc) {
  const ArcScoreTable s(3);
  MapResult consensus;
  consensus.arcs = {ArcId{1, 2}};
  consensus.u_relaxed = {1.0};
  const HeadDistribution base = head_distribution(s);
  const HeadDistribution pushed = head_distribution(s, &consensus, 2.0);
  EXPECT_GT(pushed(1, 2), base(1, 2));
  EXPECT_NEAR(pushed(1, 2), std::exp(2.0) / (std::exp(2.0) + 2.0), 1e-14);
  EXPECT_DOUBLE_EQ(pushed(0, 3), base(0, 3));
}

Matrix from_probs(std::vector<std::vector<double>> cols) {
  const int n = static_cast<int>(cols.size());
  Matrix s = Matrix::Constant(n + 1, n, -std::numeric_limits<double>::infinity());
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= n; ++i)
      if (i != j + 1) s(i, j) = std::log(cols[j][i]);
  return s;
}

TEST(MbrTest, Examples) {
  EXPECT_EQ(mbr_decode(head_distribution(ArcScoreTable(1))), (std::vector<int>{0}));
  // token 1 prefers root, token 2 prefers 1
  const auto tree = mbr_decode(head_distribution(ArcScoreTable(from_probs({{0.9, 0, 0.1}, {0.2, 0.8, 0}}))));
  EXPECT_EQ(tree, (std::vector<int>{0, 1}));
  EXPECT_TRUE(is_tree(tree));
  // mutual preference produces a cycle that MBR does not repair
  const auto cyc = mbr_decode(head_distribution(ArcScoreTable(from_probs({{0.1, 0, 0.9}, {0.1, 0.9, 0}}))));
  EXPECT_EQ(cyc, (std::vector<int>{2, 1}));
  EXPECT_FALSE(is_tree(cyc));
}

TEST(MbrTest, TiesGoToSmallerHead) {
  EXPECT_EQ(mbr_decode(head_distribution(ArcScoreTable(3))), (std::vector<int>{0, 0, 0}));
}

TEST(MstTest, Examples) {
  EXPECT_EQ(mst_decode(Matrix::Zero(2, 1)), (std::vector<int>{0}));
  Matrix w = Matrix::Constant(3, 2, -3.0);
  w(0, 0) = 0.0;
  w(1, 1) = 0.0;
  EXPECT_EQ(mst_decode(w), (std::vector<int>{0, 1}));
  // the cycle 1<->2 beats the root arcs locally but must be broken
  Matrix c = Matrix::Constant(3, 2, -1.0);
  c(2, 0) = 5.0;
  c(1, 1) = 5.0;
  const auto heads = mst_decode(c);
  EXPECT_TRUE(is_tree(heads));
  EXPECT_TRUE(heads == (std::vector<int>{0, 1}) || heads == (std::vector<int>{2, 0}));
}

TEST(MstTest, RejectsBadInput) {
  EXPECT_THROW(mst_decode(Matrix::Zero(2, 2)), ValidationError);
  Matrix w = Matrix::Zero(3, 2);
  w(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(mst_decode(w), NumericError);
}

TEST(MstTest, MatchesBruteForceUpToSix) {
  for (int n = 1; n <= 6; ++n) {
    for (int seed = 0; seed < 40; ++seed) {
      verify::Rng rng(static_cast<std::uint64_t>(100 * n + seed));
      Matrix w(n + 1, n);
      for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = rng.uniform(-3, 3);
      const auto heads = mst_decode(w);
      ASSERT_TRUE(is_tree(heads));
      double score = 0.0;
      for (int j = 1; j <= n; ++j) score += w(heads[j - 1], j - 1);
      EXPECT_NEAR(score, brute_force_arborescence(w).score, 1e-9) << "n=" << n << " seed=" << seed;
    }
  }
}

TEST(MstTest, InvariantToPerDependentShift) {
  verify::Rng rng(44);
  Matrix w(6, 5);
  for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = rng.uniform(-3, 3);
  Matrix shifted = w;
  for (int j = 0; j < 5; ++j) shifted.col(j).array() += rng.uniform(-10, 10);
  EXPECT_EQ(mst_decode(w), mst_decode(shifted));
}

Sentence gold(std::vector<int> heads) {
  Sentence s;
  s.gold_heads = heads;
  s.tokens.assign(heads.size(), "w");
  s.pos_tags.assign(heads.size(), "X");
  return s;
}

TEST(UasTest, Examples) {
  EXPECT_DOUBLE_EQ(uas(std::vector<int>{0, 1}, gold({0, 1})), 1.0);
  EXPECT_DOUBLE_EQ(uas(std::vector<int>{0, 0}, gold({0, 1})), 0.5);
  EXPECT_DOUBLE_EQ(uas(std::vector<int>{2, 0}, gold({0, 1})), 0.0);
  EXPECT_THROW(uas(std::vector<int>{0}, gold({0, 1})), ValidationError);
}

TEST(UasTest, CorpusIsTokenWeighted) {
  const std::vector<Sentence> g = {gold({0}), gold({0, 1, 1})};
  EXPECT_DOUBLE_EQ(corpus_uas({{0}, {0, 0, 0}}, g), 2.0 / 4.0);
  EXPECT_THROW(corpus_uas({}, {}), ValidationError);
  EXPECT_THROW(corpus_uas({{0}}, g), ValidationError);
}

}  // namespace
}  // namespace hodep

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

#include <set>
#include <sstream>

#include "hodep/factor_graph.hpp"
#include "hodep/verify.hpp"

namespace hodep {
namespace {

std::set<ArcId> arc_set(const FactorGraph& g) { return {g.arcs().begin(), g.arcs().end()}; }

TEST(FactorGraphTest, FiveTokensForwardHasSixSlavesSevenArcs) {
  const FactorGraph g = FactorGraph::build(ArcScoreTable(5));
  EXPECT_EQ(g.slaves().size(), 6u);
  EXPECT_EQ(arc_set(g), (std::set<ArcId>{{1, 2}, {2, 3}, {3, 4}, {4, 5}, {1, 3}, {2, 4}, {3, 5}}));
  EXPECT_EQ(g.arcs().size(), 7u);
}

TEST(FactorGraphTest, GrandparentAnchorThreeCoversThreeFourAndFourFive) {
  const FactorGraph g = FactorGraph::build(ArcScoreTable(5));
  const Slave& gp3 = g.slaves()[2];
  EXPECT_EQ(gp3.kind, SlaveKind::kGrandparentForward);
  EXPECT_EQ(gp3.anchor, 3);
  EXPECT_EQ(gp3.arcs[0], (ArcId{3, 4}));
  EXPECT_EQ(gp3.arcs[1], (ArcId{4, 5}));
}

TEST(FactorGraphTest, ShortSentencesHaveEmptyGraphs) {
  for (int n : {1, 2}) {
    const FactorGraph g = FactorGraph::build(ArcScoreTable(n), {.include_backward = true});
    EXPECT_TRUE(g.empty());
    EXPECT_TRUE(g.arcs().empty());
  }
}

TEST(FactorGraphTest, ThreeTokensDeltas) {
  const FactorGraph g = FactorGraph::build(ArcScoreTable(3));
  EXPECT_EQ(g.slaves().size(), 2u);
  EXPECT_EQ(arc_set(g), (std::set<ArcId>{{1, 2}, {2, 3}, {1, 3}}));
  EXPECT_EQ(g.delta_of({1, 2}), 2);
  EXPECT_EQ(g.delta_of({2, 3}), 1);
  EXPECT_EQ(g.delta_of({1, 3}), 1);
}

TEST(FactorGraphTest, FiveTokenDeltasMatchEnumeration) {
  const FactorGraph g = FactorGraph::build(ArcScoreTable(5));
  EXPECT_EQ(g.delta_of({2, 3}), 3);
  EXPECT_EQ(g.delta_of({4, 5}), 1);
  EXPECT_EQ(g.delta_of({1, 3}), 1);
  EXPECT_THROW(g.delta_of({5, 1}), LookupError);
}

TEST(FactorGraphTest, CountsAndDeltaAgainstEnumerationUpToTwelve) {
  for (int n = 1; n <= 12; ++n) {
    const FactorGraph g = FactorGraph::build(ArcScoreTable(n));
    EXPECT_EQ(static_cast<int>(g.slaves().size()), 2 * std::max(0, n - 2));
    // chain arcs i->i+1 plus skip arcs i->i+2
    EXPECT_EQ(static_cast<int>(g.arcs().size()), n <= 2 ? 0 : 2 * n - 3) << "n=" << n;
    int delta_sum = 0;
    for (std::size_t r = 0; r < g.arcs().size(); ++r) {
      EXPECT_GE(g.deltas()[r], 1);
      EXPECT_EQ(g.deltas()[r], verify::enumerate_delta(n, g.arcs()[r], false));
      delta_sum += g.deltas()[r];
    }
    EXPECT_EQ(delta_sum, g.total_slots());
    for (const Slave& s : g.slaves())
      for (int k = 0; k < 2; ++k) EXPECT_EQ(g.arcs()[s.arc_index[k]], s.arcs[k]);
  }
}

TEST(FactorGraphTest, BackwardSlavesMirrorForwardOnes) {
  const FactorGraph g = FactorGraph::build(ArcScoreTable(4), {.include_backward = true});
  EXPECT_EQ(g.slaves().size(), 8u);
  const Slave& gpb1 = g.slaves()[4];
  EXPECT_EQ(gpb1.kind, SlaveKind::kGrandparentBackward);
  EXPECT_EQ(gpb1.arcs[0], (ArcId{3, 2}));
  EXPECT_EQ(gpb1.arcs[1], (ArcId{2, 1}));
  const Slave& sbb1 = g.slaves()[6];
  EXPECT_EQ(sbb1.kind, SlaveKind::kSiblingBackward);
  EXPECT_EQ(sbb1.arcs[0], (ArcId{3, 2}));
  EXPECT_EQ(sbb1.arcs[1], (ArcId{3, 1}));
}

TEST(FactorGraphTest, ThetaCopiedOrSplitByDelta) {
  Matrix m = Matrix::Zero(4, 3);
  m(1, 1) = 2.0;  // 1->2, delta 2
  m(2, 2) = 0.5;  // 2->3
  m(1, 2) = -1.0;  // 1->3
  const ArcScoreTable scores(m);
  const FactorGraph plain = FactorGraph::build(scores);
  EXPECT_DOUBLE_EQ(plain.slaves()[0].theta[0], 2.0);
  EXPECT_DOUBLE_EQ(plain.slaves()[1].theta[0], 2.0);
  EXPECT_DOUBLE_EQ(plain.slaves()[1].theta[1], -1.0);
  const FactorGraph split = FactorGraph::build(scores, {.split_scores = true});
  EXPECT_DOUBLE_EQ(split.slaves()[0].theta[0], 1.0);
  EXPECT_DOUBLE_EQ(split.slaves()[0].theta[1], 0.5);
}

TEST(FactorGraphTest, SlaveScoreIsLinear) {
  Slave s;
  EXPECT_DOUBLE_EQ(slave_score(s, std::array<double, 2>{0, 0}), 0.0);
  s.theta = {1.5, -0.5};
  EXPECT_DOUBLE_EQ(slave_score(s, std::array<double, 2>{1, 1}), 1.0);
  s.theta = {2, 3};
  EXPECT_DOUBLE_EQ(slave_score(s, std::array<double, 2>{0.5, 0.5}), 2.5);
}

TEST(FactorGraphTest, DumpListsSlavesAndArcs) {
  std::ostringstream out;
  FactorGraph::build(ArcScoreTable(5)).dump(out);
  const std::string text = out.str();
  EXPECT_EQ(text.rfind("factor-graph n=5 slaves=6 arcs=7\n", 0), 0u);
  EXPECT_NE(text.find("slave 2 grandparent-forward anchor=3 arcs=3->4,4->5"), std::string::npos);
  EXPECT_NE(text.find("arc 2->3 delta=3"), std::string::npos);
}

}  // namespace
}  // namespace hodep

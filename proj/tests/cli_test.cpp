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

// Drives the hodep binary end to end.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hodep/corpus.hpp"
#include "hodep/tree.hpp"
#include "support/synthetic_treebank.hpp"

namespace hodep {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("hodep_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
    write(path("train.conllu"), testing::synthetic_treebank(40, 1));
    write(path("dev.conllu"), testing::synthetic_treebank(10, 2));
    // a small trained model shared by the parse tests
    ASSERT_EQ(run("train --train " + path("train.conllu") + " --epochs 2 --d-emb 8 --d-pos 4 --d-hidden 8 --d-arc 8" +
                  " --model " + path("m.bin") + " --vocab " + path("v.txt") + " --metrics " + path("m.csv")),
              0);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string path(const std::string& name) { return (dir_ / name).string(); }

  static void write(const std::string& p, const std::vector<Sentence>& s) {
    std::ofstream out(p);
    write_conllu(out, s);
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  // Returns the exit status; stdout goes to out.txt, stderr to err.txt.
  static int run(const std::string& args) {
    const std::string cmd = std::string(HODEP_CLI) + " " + args + " > " + path("out.txt") + " 2> " + path("err.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static fs::path dir_;
};

fs::path CliTest::dir_;

TEST_F(CliTest, MissingTrainFlagIsUsageError) { EXPECT_EQ(run("train --epochs 1"), 2); }

TEST_F(CliTest, UnknownFlagIsUsageError) { EXPECT_EQ(run("train --train " + path("train.conllu") + " --bogus"), 2); }

TEST_F(CliTest, MissingFileIsUsageError) { EXPECT_EQ(run("train --train " + path("nope.conllu")), 2); }

TEST_F(CliTest, HelpListsFlags) {
  EXPECT_EQ(run("train --help"), 0);
  const std::string help = slurp(path("out.txt"));
  for (const char* flag : {"--optimizer", "--lr", "--epochs", "--batch", "--max-len", "--high-order", "--rho",
                           "--seed", "--warm-start-epochs", "--jobs"})
    EXPECT_NE(help.find(flag), std::string::npos) << flag;
}

TEST_F(CliTest, SameSeedGivesIdenticalMetrics) {
  const std::string base = "train --train " + path("train.conllu") + " --dev " + path("dev.conllu") +
                           " --epochs 2 --seed 7 --d-emb 8 --d-pos 4 --d-hidden 8 --d-arc 8 --model " +
                           path("s.bin") + " --vocab " + path("s.txt");
  ASSERT_EQ(run(base + " --metrics " + path("a.csv")), 0);
  ASSERT_EQ(run(base + " --metrics " + path("b.csv") + " --jobs 1"), 0);
  const std::string a = slurp(path("a.csv"));
  EXPECT_EQ(a, slurp(path("b.csv")));
  EXPECT_EQ(a.rfind("epoch,loss,dev_uas,admm_converged_rate\n", 0), 0u);
}

TEST_F(CliTest, ConfigFileSuppliesDefaultsAndFlagsWin) {
  {
    std::ofstream cfg(path("run.ini"));
    cfg << "[train]\nepochs=1\nseed=3\n";
  }
  const std::string base = "--config " + path("run.ini") + " train --train " + path("train.conllu") +
                           " --d-emb 8 --d-pos 4 --d-hidden 8 --d-arc 8 --model " + path("c.bin") + " --vocab " +
                           path("c.txt");
  ASSERT_EQ(run(base + " --metrics " + path("c1.csv")), 0);
  const std::string one = slurp(path("c1.csv"));
  EXPECT_EQ(std::count(one.begin(), one.end(), '\n'), 2);
  ASSERT_EQ(run(base + " --metrics " + path("c2.csv") + " --epochs 2"), 0);
  const std::string two = slurp(path("c2.csv"));
  EXPECT_EQ(std::count(two.begin(), two.end(), '\n'), 3);
}

TEST_F(CliTest, ParseEmitsTreesForEverySentence) {
  for (const char* mode : {"false", "true"}) {
    ASSERT_EQ(run("parse --model " + path("m.bin") + " --vocab " + path("v.txt") + " --input " +
                  path("train.conllu") + " --output " + path("pred.conllu") + " --high-order " + mode),
              0);
    const auto pred = load_conllu(path("pred.conllu"));
    ASSERT_EQ(pred.size(), 40u);
    for (const auto& s : pred) EXPECT_TRUE(is_tree(s.gold_heads));
  }
}

TEST_F(CliTest, EmptyInputGivesEmptyOutput) {
  std::ofstream(path("empty.conllu")).close();
  ASSERT_EQ(run("parse --model " + path("m.bin") + " --vocab " + path("v.txt") + " --input " + path("empty.conllu") +
                " --output " + path("empty_out.conllu")),
            0);
  EXPECT_TRUE(slurp(path("empty_out.conllu")).empty());
}

TEST_F(CliTest, DumpFactorGraphOnFiveTokens) {
  Sentence s;
  s.tokens = {"the", "dog", "saw", "a", "cat"};
  s.pos_tags = {"DET", "NOUN", "VERB", "DET", "NOUN"};
  s.gold_heads = {2, 3, 0, 5, 3};
  write(path("five.conllu"), {s});
  ASSERT_EQ(run("parse --model " + path("m.bin") + " --vocab " + path("v.txt") + " --input " + path("five.conllu") +
                " --high-order true --dump-factor-graph " + path("graph.txt") + " --trace-admm " +
                path("trace.csv")),
            0);
  const std::string dump = slurp(path("graph.txt"));
  EXPECT_NE(dump.find("factor-graph n=5 slaves=6 arcs=7"), std::string::npos) << dump;
  const std::string trace = slurp(path("trace.csv"));
  EXPECT_EQ(trace.rfind("sentence,iteration,primal,dual,objective\n1,1,", 0), 0u);
}

TEST_F(CliTest, MismatchedVocabularyIsRuntimeFailure) {
  Sentence s;
  s.tokens = {"x"};
  s.pos_tags = {"X"};
  s.gold_heads = {0};
  write(path("tiny.conllu"), {s});
  ASSERT_EQ(run("train --train " + path("tiny.conllu") + " --epochs 1 --d-emb 8 --d-pos 4 --d-hidden 8 --d-arc 8" +
                " --model " + path("t.bin") + " --vocab " + path("t.txt") + " --metrics " + path("t.csv")),
            0);
  EXPECT_EQ(run("parse --model " + path("m.bin") + " --vocab " + path("t.txt") + " --input " + path("tiny.conllu")),
            1);
}

TEST_F(CliTest, EvalExamples) {
  ASSERT_EQ(run("eval --gold " + path("dev.conllu") + " --pred " + path("dev.conllu")), 0);
  EXPECT_EQ(slurp(path("out.txt")), "UAS 1.0000\n");

  Sentence gold;
  gold.tokens = {"a", "b"};
  gold.pos_tags = {"X", "X"};
  gold.gold_heads = {0, 1};
  Sentence flipped = gold;
  flipped.gold_heads = {0, 0};
  write(path("g2.conllu"), {gold});
  write(path("p2.conllu"), {flipped});
  ASSERT_EQ(run("eval --gold " + path("g2.conllu") + " --pred " + path("p2.conllu")), 0);
  EXPECT_EQ(slurp(path("out.txt")), "UAS 0.5000\n");

  std::ofstream(path("e.conllu")).close();
  EXPECT_EQ(run("eval --gold " + path("e.conllu") + " --pred " + path("e.conllu")), 1);
  EXPECT_EQ(run("eval --gold " + path("g2.conllu") + " --pred " + path("dev.conllu")), 1);
}

TEST_F(CliTest, VerifySingleSuiteWithScaledSeeds) {
  ASSERT_EQ(run("verify --suite admm --seeds 10"), 0);
  const std::string out = slurp(path("out.txt"));
  EXPECT_NE(out.find("PASS admm"), std::string::npos) << out;
  EXPECT_EQ(out.find("mst"), std::string::npos);
  EXPECT_EQ(run("verify --suite nonsense"), 2);
}

}  // namespace
}  // namespace hodep

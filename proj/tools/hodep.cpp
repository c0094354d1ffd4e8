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

// hodep command-line tool: train / parse / eval / verify.
//
// Exit codes: 0 success, 1 runtime failure (training abort, model/vocab
// mismatch, misaligned evaluation, failing verify suite), 2 bad flags or
// paths.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <string>

#include "hodep/hodep.hpp"

namespace {

using namespace hodep;

constexpr int kOk = 0;
constexpr int kRuntimeFailure = 1;
constexpr int kUsage = 2;

struct UsageError : Error {
  using Error::Error;
};

const std::map<std::string, EncoderKind> kEncoders = {
    {"birnn", EncoderKind::kBiRnn}, {"window", EncoderKind::kWindow}, {"identity", EncoderKind::kIdentity}};
const std::map<std::string, OptimizerKind> kOptimizers = {{"adam", OptimizerKind::kAdam},
                                                          {"sgd", OptimizerKind::kSgd}};
const std::map<std::string, SlaveMode> kModes = {{"box", SlaveMode::kBox}, {"pattern", SlaveMode::kPattern}};

// Flags shared by every subcommand that runs inference.
void add_inference_flags(CLI::App* cmd, bool& high_order, double& beta, AdmmConfig& admm, FactorGraphOptions& graph) {
  cmd->add_option("--high-order", high_order, "Couple first-order scores with ADMM over the factor graph")
      ->capture_default_str();
  cmd->add_option("--beta", beta, "Weight of the consensus term in the head distribution")->capture_default_str();
  cmd->add_option("--rho", admm.rho, "ADMM quadratic penalty")->capture_default_str();
  cmd->add_option("--eta0", admm.eta0, "ADMM multiplier step size at t = 0 (decays as 1/sqrt(t+1))")
      ->capture_default_str();
  cmd->add_option("--eps-primal", admm.eps_primal, "Primal residual tolerance")->capture_default_str();
  cmd->add_option("--eps-dual", admm.eps_dual, "Dual residual tolerance")->capture_default_str();
  cmd->add_option("--max-iters", admm.max_iters, "ADMM iteration cap")->capture_default_str();
  cmd->add_option("--rounding-threshold", admm.rounding_threshold, "Threshold for rounding u to {0,1}")
      ->capture_default_str();
  cmd->add_option("--slave-mode", admm.mode, "Slave solver: box or pattern")
      ->transform(CLI::CheckedTransformer(kModes, CLI::ignore_case))
      ->default_str("box");
  cmd->add_option("--include-backward", graph.include_backward, "Add mirrored right-to-left slaves")
      ->capture_default_str();
  cmd->add_option("--split-scores", graph.split_scores, "Divide arc scores by slave coverage")->capture_default_str();
}

std::vector<Sentence> read_corpus(const std::string& path) {
  if (path == "-") return read_conllu(std::cin, "<stdin>");
  return load_conllu(path);
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string train_path, dev_path;
  std::string model_path = "model.bin";
  std::string vocab_path = "vocab.txt";
  std::string metrics_path = "metrics.csv";
  TrainConfig config;
};

void write_report_line(std::ostream& out, int epoch, const TrainReport& r) {
  const auto e = static_cast<std::size_t>(epoch - 1);
  out << "epoch " << epoch << " loss=" << std::fixed << std::setprecision(6) << r.epoch_loss[e];
  if (!std::isnan(r.dev_uas[e])) out << " dev_uas=" << std::setprecision(4) << r.dev_uas[e];
  if (!std::isnan(r.admm_convergence[e])) out << " admm_converged=" << std::setprecision(4) << r.admm_convergence[e];
  out << " wall=" << std::setprecision(1) << r.wall_seconds << "s" << std::defaultfloat << std::endl;
}

int run_train(const TrainArgs& a) {
  a.config.validate();
  const auto train_set = load_conllu(a.train_path);
  const auto dev_set = a.dev_path.empty() ? std::vector<Sentence>{} : load_conllu(a.dev_path);
  std::cerr << "train: " << train_set.size() << " sentences";
  if (!dev_set.empty()) std::cerr << ", dev: " << dev_set.size() << " sentences";
  std::cerr << ", jobs " << a.config.jobs << '\n';
  auto [model, report] = train(train_set, dev_set, a.config, [&](int epoch, const Model& m, const TrainReport& r) {
    save_model(a.model_path, a.vocab_path, m);
    write_report_line(std::cout, epoch, r);
  });
  std::ofstream metrics(a.metrics_path);
  if (!metrics) throw Error("cannot open '" + a.metrics_path + "' for writing");
  report.write_metrics_csv(metrics);
  return kOk;
}

// --- parse -----------------------------------------------------------------

struct ParseArgs {
  std::string model_path = "model.bin";
  std::string vocab_path = "vocab.txt";
  std::string input = "-";
  std::string output = "-";
  std::string trace_path, dump_path;
  InferenceOptions options;
  std::size_t jobs = default_jobs();
};

int run_parse(const ParseArgs& a) {
  a.options.admm.validate();
  const Model model = load_model(a.model_path, a.vocab_path);
  const auto sentences = read_corpus(a.input);

  std::vector<std::vector<int>> heads;
  int fallbacks = 0, admm_runs = 0, converged = 0;
  if (a.trace_path.empty() && a.dump_path.empty()) {
    Evaluation ev = parse_corpus(model, sentences, a.options, a.jobs);
    heads = std::move(ev.heads);
    fallbacks = ev.mst_fallbacks;
    admm_runs = ev.admm_runs;
    converged = ev.admm_converged;
  } else {
    // Sequential so trace and dump output stay in sentence order.
    std::ofstream trace, dump;
    if (!a.trace_path.empty()) {
      trace.open(a.trace_path);
      if (!trace) throw Error("cannot open '" + a.trace_path + "' for writing");
      trace << "sentence,iteration,primal,dual,objective\n" << std::setprecision(10);
    }
    if (!a.dump_path.empty()) {
      dump.open(a.dump_path);
      if (!dump) throw Error("cannot open '" + a.dump_path + "' for writing");
    }
    for (std::size_t k = 0; k < sentences.size(); ++k) {
      AdmmObserver observer;
      if (trace.is_open())
        observer = [&](const AdmmState& st, double objective) {
          trace << k + 1 << ',' << st.iter << ',' << st.primal_residual << ',' << st.dual_residual << ','
                << objective << '\n';
        };
      const SentenceInference inf = infer(sentences[k], model.vocab, model.params, a.options, nullptr, observer);
      if (dump.is_open()) {
        dump << "# sentence " << k + 1 << '\n';
        (inf.graph ? *inf.graph : FactorGraph::build(inf.scores, a.options.graph)).dump(dump);
      }
      ParseResult r = decode(inf);
      fallbacks += r.mst_fallback;
      admm_runs += r.used_admm;
      converged += r.used_admm && r.admm_converged;
      heads.push_back(std::move(r.heads));
    }
  }

  if (a.output == "-") {
    write_conllu(std::cout, sentences, &heads);
  } else {
    std::ofstream out(a.output);
    if (!out) throw Error("cannot open '" + a.output + "' for writing");
    write_conllu(out, sentences, &heads);
  }
  std::cerr << "parsed " << sentences.size() << " sentences, " << fallbacks << " MST fallbacks";
  if (admm_runs) std::cerr << ", ADMM converged " << converged << "/" << admm_runs;
  std::cerr << '\n';
  return kOk;
}

// --- eval ------------------------------------------------------------------

int run_eval(const std::string& gold_path, const std::string& pred_path) {
  const auto gold = load_conllu(gold_path);
  const auto pred = load_conllu(pred_path);
  if (gold.size() != pred.size())
    throw ValidationError("eval: " + std::to_string(gold.size()) + " gold sentences vs " +
                          std::to_string(pred.size()) + " predicted");
  std::vector<std::vector<int>> heads;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (pred[k].tokens != gold[k].tokens)
      throw ValidationError("eval: sentence " + std::to_string(k + 1) + " tokens differ between files");
    heads.push_back(pred[k].gold_heads);
  }
  std::cout << "UAS " << std::fixed << std::setprecision(4) << corpus_uas(heads, gold) << '\n';
  return kOk;
}

// --- verify ----------------------------------------------------------------

int run_verify(const std::string& suite, int seeds) {
  std::vector<verify::SuiteReport> reports;
  const bool all = suite == "all";
  const double scale = seeds > 0 ? seeds / 100.0 : 1.0;
  auto scaled = [&](int base) { return std::max(1, static_cast<int>(base * scale)); };
  if (all || suite == "factor-graph") reports.push_back(verify::factor_graph_suite());
  if (all || suite == "admm") {
    verify::AdmmSuiteOptions o;
    o.seeds = scaled(o.seeds);
    reports.push_back(verify::admm_suite(o));
  }
  if (all || suite == "slave") reports.push_back(verify::slave_suite(scaled(1000)));
  if (all || suite == "oracle") {
    verify::OracleSuiteOptions o;
    o.seeds = scaled(o.seeds);
    reports.push_back(verify::oracle_suite(o));
  }
  if (all || suite == "mst") reports.push_back(verify::mst_suite(scaled(200)));
  if (all || suite == "gradient") reports.push_back(verify::gradient_suite());

  bool ok = true;
  for (const auto& r : reports) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(14) << r.name << std::right << std::fixed
              << std::setprecision(2) << r.seconds << "s\n";
    for (const auto& d : r.details) std::cout << "    " << d << '\n';
    ok = ok && r.passed;
  }
  return ok ? kOk : kRuntimeFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hodep: graph-based dependency parser with second-order ADMM inference"};
  app.set_config("--config", "", "TOML/INI file with flag defaults (flags on the command line win)");
  app.require_subcommand(1);
  app.fallthrough();

  TrainArgs ta;
  ta.config.jobs = default_jobs();
  auto* train_cmd = app.add_subcommand("train", "Train a model on a CoNLL-U treebank");
  train_cmd->add_option("--train", ta.train_path, "Training CoNLL-U file")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--dev", ta.dev_path, "Development CoNLL-U file (dev UAS per epoch)")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--model", ta.model_path, "Checkpoint path (rewritten every epoch)")->capture_default_str();
  train_cmd->add_option("--vocab", ta.vocab_path, "Vocabulary path")->capture_default_str();
  train_cmd->add_option("--metrics", ta.metrics_path, "Per-epoch metrics (comma-separated)")->capture_default_str();
  train_cmd->add_option("--optimizer", ta.config.optimizer, "adam or sgd")
      ->transform(CLI::CheckedTransformer(kOptimizers, CLI::ignore_case))
      ->default_str("adam");
  train_cmd->add_option("--lr", ta.config.learning_rate, "Learning rate [default: 1e-3 adam, 1e-2 sgd]");
  train_cmd->add_option("--epochs", ta.config.epochs, "Training epochs")->capture_default_str();
  train_cmd->add_option("--batch", ta.config.batch_size, "Sentences per batch")->capture_default_str();
  train_cmd->add_option("--max-len", ta.config.max_len, "Drop training sentences longer than this")
      ->capture_default_str();
  train_cmd->add_option("--seed", ta.config.seed, "Seed for initialization and shuffling")->capture_default_str();
  train_cmd->add_option("--warm-start-epochs", ta.config.warm_start_epochs,
                        "First-order epochs before coupled training")
      ->capture_default_str();
  train_cmd->add_option("--min-count", ta.config.min_count, "Minimum word frequency for the vocabulary")
      ->capture_default_str();
  train_cmd->add_option("--encoder", ta.config.dims.encoder, "birnn, window or identity")
      ->transform(CLI::CheckedTransformer(kEncoders, CLI::ignore_case))
      ->default_str("birnn");
  train_cmd->add_option("--d-emb", ta.config.dims.d_emb, "Word embedding size")->capture_default_str();
  train_cmd->add_option("--d-pos", ta.config.dims.d_pos, "POS embedding size")->capture_default_str();
  train_cmd->add_option("--d-hidden", ta.config.dims.d_hidden, "Recurrent state size per direction")
      ->capture_default_str();
  train_cmd->add_option("--d-arc", ta.config.dims.d_arc, "Arc MLP size")->capture_default_str();
  train_cmd->add_option("--jobs", ta.config.jobs, "Worker threads [default: logical cores]");
  add_inference_flags(train_cmd, ta.config.high_order, ta.config.beta, ta.config.admm, ta.config.graph);

  ParseArgs pa;
  auto* parse_cmd = app.add_subcommand("parse", "Parse CoNLL-U input with a trained model");
  parse_cmd->add_option("--model", pa.model_path, "Checkpoint path")->capture_default_str()->check(CLI::ExistingFile);
  parse_cmd->add_option("--vocab", pa.vocab_path, "Vocabulary path")->capture_default_str()->check(CLI::ExistingFile);
  parse_cmd->add_option("--input", pa.input, "CoNLL-U input ('-' = stdin)")->capture_default_str();
  parse_cmd->add_option("--output", pa.output, "CoNLL-U output with predicted heads ('-' = stdout)")
      ->capture_default_str();
  parse_cmd->add_option("--trace-admm", pa.trace_path, "Write per-iteration ADMM residuals/objective as CSV");
  parse_cmd->add_option("--dump-factor-graph", pa.dump_path, "Write each sentence's factor graph to this file");
  parse_cmd->add_option("--jobs", pa.jobs, "Worker threads [default: logical cores]");
  add_inference_flags(parse_cmd, pa.options.high_order, pa.options.beta, pa.options.admm, pa.options.graph);

  std::string gold_path, pred_path;
  auto* eval_cmd = app.add_subcommand("eval", "Print corpus UAS of predicted heads against gold");
  eval_cmd->add_option("--gold", gold_path, "Gold CoNLL-U")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--pred", pred_path, "Predicted CoNLL-U")->required()->check(CLI::ExistingFile);

  std::string suite = "all";
  int seeds = 100;
  auto* verify_cmd = app.add_subcommand("verify", "Run the built-in oracle suites");
  verify_cmd->add_option("--suite", suite, "all, factor-graph, admm, slave, oracle, mst or gradient")
      ->check(CLI::IsMember({"all", "factor-graph", "admm", "slave", "oracle", "mst", "gradient"}))
      ->capture_default_str();
  verify_cmd->add_option("--seeds", seeds, "Seed budget; 100 is the full suite, other values scale it")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (parse_cmd->parsed() && pa.input != "-" && !std::filesystem::exists(pa.input))
      throw UsageError("parse: input '" + pa.input + "' does not exist");
    if (train_cmd->parsed()) return run_train(ta);
    if (parse_cmd->parsed()) return run_parse(pa);
    if (eval_cmd->parsed()) return run_eval(gold_path, pred_path);
    if (verify_cmd->parsed()) return run_verify(suite, seeds);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kUsage;
}

#include <gtest/gtest.h>

#include "mwpx/corpus.h"
#include "mwpx/harness.h"
#include "mwpx/solver/train.h"
#include "test_util.h"

namespace mwpx {
namespace {

using namespace ops;
using testing::error_of;

const ConstantTable& table() {
  static const ConstantTable t = ConstantTable::standard();
  return t;
}

ProblemRecord make(std::string id, std::string text, ExprTree tree, double gold) {
  ProblemRecord r;
  r.id = std::move(id);
  r.lang = "en";
  Extraction ex = extract_quantities(tokenize(text, "en"));
  r.tokens = ex.tokens;
  r.quantities = ex.quantities;
  r.gold_tree = std::move(tree);
  r.gold_answer = gold;
  return r;
}

const char kKeith[] = "Keith has 20 books . Jason has 21 books . How many books in all ?";
const char kLisa[] = "Lisa flew 256 miles at 32 miles per hour . How many hours ?";

// Small model trained to reproduce both training records exactly.
const solver::Model& memorizer() {
  static const solver::Model model = [] {
    std::vector<ProblemRecord> train = {make("k", kKeith, add(Q(0), Q(1)), 41),
                                        make("l", kLisa, div(Q(0), Q(1)), 8)};
    solver::ModelConfig mc;
    mc.embed_dim = 16;
    mc.hidden_dim = 32;
    mc.state_dim = 32;
    mc.max_quantity_tokens = 4;
    solver::Model m = solver::make_model(mc, table(), train, 2);
    solver::TrainConfig tc;
    tc.max_epochs = 300;
    tc.patience = 300;
    tc.batch_size = 2;
    tc.stop_at_dev_accuracy = 1.0;
    solver::train(m, train, train, tc);
    return m;
  }();
  return model;
}

TEST(SolveAccuracy, MemorizerOnItsTrainingSet) {
  std::vector<ProblemRecord> train = {make("k", kKeith, add(Q(0), Q(1)), 41),
                                      make("l", kLisa, div(Q(0), Q(1)), 8)};
  EvalReport r = solve_accuracy(memorizer(), train);
  EXPECT_EQ(r.total, 2u);
  EXPECT_EQ(r.solved, 2u);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_TRUE(r.consistent());
}

TEST(SolveAccuracy, EosOnlyModel) {
  std::vector<ProblemRecord> recs = {make("k", kKeith, add(Q(0), Q(1)), 41),
                                     make("l", kLisa, div(Q(0), Q(1)), 8)};
  solver::Model m = memorizer();
  for (auto& t : m.params.tensors()) t.tensor->setZero();
  m.params.b_gen(m.vocab.eos(), 0) = 10.0;
  EvalReport r = solve_accuracy(m, recs);
  EXPECT_EQ(r.accuracy, 0.0);
  EXPECT_EQ(r.unsolved_reasons.at("invalid_tree"), 2u);
  EXPECT_EQ(r.unsolved_reasons.at("eval_error"), 0u);
  EXPECT_EQ(r.unsolved_reasons.at("wrong_value"), 0u);
  for (const auto& o : r.records) EXPECT_EQ(o.outcome, Outcome::kInvalidTree);
}

std::vector<ProblemRecord> mixed_outcomes() {
  // 3 solved, 5 wrong value, 2 division by zero.
  std::vector<ProblemRecord> recs;
  for (int i = 0; i < 10; ++i) {
    if (i < 8) {
      recs.push_back(make("r" + std::to_string(i), kKeith, add(Q(0), Q(1)), i < 3 ? 41 : 40));
      recs.back().category = i < 3 ? "addsub" : "other";
    } else {
      recs.push_back(make("r" + std::to_string(i), kLisa, div(Q(0), Q(1)), 8));
      recs.back().quantities[1].value = 0;
      recs.back().category = "singleop";
    }
  }
  return recs;
}

TEST(SolveAccuracy, MixedOutcomes) {
  auto recs = mixed_outcomes();
  EvalReport r = solve_accuracy(memorizer(), recs, kDefaultAnswerThreshold, 32, "mix", "en");
  EXPECT_EQ(r.total, 10u);
  EXPECT_EQ(r.solved, 3u);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.3);
  EXPECT_EQ(r.unsolved_reasons.at("wrong_value"), 5u);
  EXPECT_EQ(r.unsolved_reasons.at("eval_error"), 2u);
  EXPECT_EQ(r.unsolved_reasons.at("invalid_tree"), 0u);
  EXPECT_EQ(r.breakdown.at("addsub"), (CategoryCount{3, 3}));
  EXPECT_EQ(r.breakdown.at("other"), (CategoryCount{0, 5}));
  EXPECT_EQ(r.breakdown.at("singleop"), (CategoryCount{0, 2}));
  EXPECT_TRUE(r.consistent());
  for (std::size_t i = 1; i < r.records.size(); ++i) {
    EXPECT_LT(r.records[i - 1].id, r.records[i].id);
  }
}

TEST(SolveAccuracy, ThreadsDoNotChangeTheReport) {
  auto recs = mixed_outcomes();
  std::string one = solve_accuracy(memorizer(), recs, 1e-4, 32, "d", "en", 1).to_json();
  for (int threads : {2, 3, 16}) {
    EXPECT_EQ(solve_accuracy(memorizer(), recs, 1e-4, 32, "d", "en", threads).to_json(), one);
  }
}

TEST(EvalReport, JsonRoundTripAndConsistency) {
  EvalReport r = solve_accuracy(memorizer(), mixed_outcomes(), 1e-4, 32, "mix", "en");
  EvalReport back = EvalReport::from_json(r.to_json());
  EXPECT_EQ(back.to_json(), r.to_json());
  EXPECT_TRUE(back.consistent());
  EXPECT_EQ(back.solved, 3u);

  EvalReport tampered = back;
  tampered.solved = 4;
  EXPECT_FALSE(tampered.consistent());
  tampered = back;
  ASSERT_EQ(tampered.records.back().outcome, Outcome::kEvalError);
  tampered.records.back().outcome = Outcome::kSolved;
  EXPECT_FALSE(tampered.consistent());
  EXPECT_NE(r.summary().find("3/10"), std::string::npos) << r.summary();
}

TEST(EvalReport, EmptyInput) {
  EvalReport r = EvalReport::from_records("d", "en", {});
  EXPECT_EQ(r.total, 0u);
  EXPECT_EQ(r.accuracy, 0.0);
  EXPECT_EQ(r.unsolved_reasons.size(), 3u);
  EXPECT_TRUE(r.consistent());
}

TEST(ExperimentConfig, JsonRoundTrip) {
  ExperimentConfig c;
  c.name = "rt";
  c.synthetic = desk_synth_config(10, 2, 2, 4);
  c.methods = {{solver::TrainMode::kMono, {"synthA"}}, {solver::TrainMode::kMixedCLTC, {}}};
  c.eval_langs = {"synthA", "synthB"};
  c.model.embed_dim = 12;
  c.model.squash = solver::Squash::kSigmoid;
  c.train.max_epochs = 7;
  c.train.negatives = solver::NegativeSet::kAllOthers;
  c.seed = 9;
  c.threads = 2;
  ExperimentConfig back = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.methods[0].label(), "mono(synthA)");
  EXPECT_EQ(back.methods[1].label(), "mixed+cl+tc");
  EXPECT_EQ(back.model, c.model);
}

TEST(ExperimentConfig, PresetAndErrors) {
  ExperimentConfig c = ExperimentConfig::from_json(R"({
    "schema_version": 1,
    "synthetic": {"preset": "half_paired", "train": 8, "dev": 2, "test": 2, "seed": 3},
    "methods": [{"mode": "mixed"}]
  })");
  ASSERT_TRUE(c.synthetic);
  EXPECT_EQ(c.synthetic->num_problems, 12);
  EXPECT_EQ(error_of([] { ExperimentConfig::from_json(R"({"schema_version": 99})"); }),
            Errc::kConfigError);
  EXPECT_EQ(error_of([] {
              ExperimentConfig::from_json(R"({"methods": [{"mode": "bogus"}]})");
            }),
            Errc::kConfigError);
  EXPECT_EQ(error_of([] { ExperimentConfig::from_json("[1, 2"); }), Errc::kConfigError);
}

ExperimentConfig tiny_experiment() {
  ExperimentConfig c;
  c.synthetic = desk_synth_config(40, 10, 10, 5);
  c.model.embed_dim = 8;
  c.model.hidden_dim = 16;
  c.model.state_dim = 16;
  c.train.max_epochs = 2;
  c.train.batch_size = 8;
  c.methods = {{solver::TrainMode::kMono, {"synthA"}}, {solver::TrainMode::kMixedCL, {}}};
  return c;
}

TEST(RunExperiment, CellsAndDeterminism) {
  ExperimentConfig c = tiny_experiment();
  ExperimentResult a = run_experiment(c);
  ExperimentResult b = run_experiment(c);
  EXPECT_EQ(a.to_json(), b.to_json());
  ASSERT_EQ(a.rows.size(), 2u);
  for (const auto& row : a.rows) {
    ASSERT_EQ(row.cells.size(), 2u);
    for (const auto& [key, report] : row.cells) {
      EXPECT_EQ(report.total, 10u) << key.second;
      EXPECT_TRUE(report.consistent());
    }
  }
  EXPECT_EQ(a.rows[0].training.languages, std::vector<std::string>{"synthA"});
  EXPECT_NE(a.table().find("mono(synthA)"), std::string::npos);
}

TEST(RunExperiment, EmptyTcTrainingFailsBeforeAnyTraining) {
  SynthConfig s;
  s.templates = {{"add", "+ N0 N1", {{"la", {"a {N0} b {N1}"}}}, {{1, 9}, {1, 9}}},
                 {"mul", "* N0 N1", {{"lb", {"{N0} x {N1} y"}}}, {{1, 9}, {1, 9}}}};
  s.num_problems = 20;
  s.dev_problems = 4;
  s.test_problems = 4;
  ExperimentConfig c;
  c.synthetic = s;
  c.model.embed_dim = 4;
  c.model.hidden_dim = 4;
  c.model.state_dim = 4;
  c.train.max_epochs = 1;
  int epochs_run = 0;
  c.train.on_epoch = [&](const solver::EpochLog&) { ++epochs_run; };
  c.methods = {{solver::TrainMode::kMixed, {}}, {solver::TrainMode::kMixedCLTC, {}}};
  EXPECT_EQ(error_of([&] { run_experiment(c); }), Errc::kConfigError);
  EXPECT_EQ(epochs_run, 0);
}

}  // namespace
}  // namespace mwpx

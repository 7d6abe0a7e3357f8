#include <gtest/gtest.h>

#include <nlohmann/json.hpp>
#include <sstream>

#include "cli.h"
#include "mwpx/corpus.h"
#include "mwpx/harness.h"
#include "test_util.h"

namespace mwpx::cli {
namespace {

using testing::TempFile;

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run(std::vector<std::string> args, const std::string& stdin_text = "") {
  args.insert(args.begin(), "mwpx");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::istringstream in(stdin_text);
  std::ostringstream out, err;
  int code = cli_main(static_cast<int>(argv.size()), argv.data(), in, out, err);
  return {code, out.str(), err.str()};
}

TEST(Cli, UsageErrors) {
  CliRun unknown = run({"frobnicate"});
  EXPECT_EQ(unknown.code, 2);
  EXPECT_NE(unknown.err.find("adapt"), std::string::npos) << unknown.err;
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"solve"}).code, 2);  // --model is required
  EXPECT_EQ(run({"train", "--train", "x", "--out", "y", "--epochs", "many"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, RuntimeErrorsExitOne) {
  CliRun r = run({"templates", "--input", "/nonexistent/records.jsonl"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("FileFormatError"), std::string::npos) << r.err;
}

TEST(Cli, SynthThenTemplates) {
  TempFile corpus(".jsonl"), config(".json");
  CliRun s = run({"synth", "--preset", "half_paired", "--train", "30", "--dev", "5", "--test", "5",
               "--seed", "2", "--out", corpus.path(), "--dump-config", config.path()});
  ASSERT_EQ(s.code, 0) << s.err;
  auto recs = read_records(corpus.path(), ConstantTable::standard());
  // Paired templates give two records per problem, one-language ones give one.
  EXPECT_GT(recs.size(), 40u);
  EXPECT_LT(recs.size(), 80u);

  // The dumped config regenerates the same corpus.
  TempFile again(".jsonl");
  ASSERT_EQ(run({"synth", "--config", config.path(), "--out", again.path()}).code, 0);
  EXPECT_EQ(again.read(), corpus.read());

  CliRun t = run({"templates", "--input", corpus.path(), "--filter-tc"});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_NE(t.out.find("⟨N⟩"), std::string::npos);
  EXPECT_NE(t.out.find("filter_tc: kept"), std::string::npos);
}

TEST(Cli, AdaptPartitionsInput) {
  TempFile input(".json", R"([
    {"Problem": "keith has 20 books and jason has 21 books .", "linear_formula": "add(n0,n1)|",
     "options": "a ) 40 , b ) 41 , c ) 42", "correct": "b"},
    {"Problem": "what is the sine of 30 ?", "linear_formula": "sine(n0)|",
     "options": "a ) 0.5 , b ) 1", "correct": "a"},
    {"Problem": "a cube has edge 2 .", "linear_formula": "volume_cube(n0)|",
     "options": "a ) 8 , b ) 6", "correct": "a"},
    {"Problem": "add 1 and 2 .", "linear_formula": "add(n0,n1)|",
     "options": "a ) 4 , b ) 5", "correct": "a"}
  ])");
  TempFile out(".jsonl"), report(".json"), constants(".json");
  CliRun r = run({"adapt", "--input", input.path(), "--out", out.path(), "--report", report.path(),
               "--constants-out", constants.path(), "--split", "train"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto rep = nlohmann::json::parse(report.read());
  EXPECT_EQ(rep["input"], 4);
  EXPECT_EQ(rep["kept"], 1);
  EXPECT_EQ(rep["rejected_filtered_op"], 1);
  EXPECT_EQ(rep["rejected_pow"], 1);
  EXPECT_EQ(rep["rejected_verification"], 1);
  EXPECT_EQ(rep["rejected_parse"], 0);
  EXPECT_EQ(rep["per_split"]["train"]["input"], 4);
  EXPECT_EQ(rep["filtered_usage"]["sine"], 1);
  auto recs = read_records(out.path(), ConstantTable::standard());
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].gold_answer, 41.0);
}

TEST(Cli, GradcheckPasses) {
  CliRun r = run({"gradcheck", "--loss", "ce", "--seed", "2"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("ok"), std::string::npos);
}

TEST(Cli, TrainEvalSolve) {
  // A corpus of English-like problems plus the worked example itself.
  TempFile corpus(".jsonl");
  ASSERT_EQ(run({"synth", "--preset", "english", "--train", "200", "--dev", "30", "--test",
                 "30", "--seed", "3", "--out", corpus.path()})
                .code,
            0);
  ConstantTable table = ConstantTable::standard();
  auto recs = read_records(corpus.path(), table);
  ProblemRecord keith;
  keith.id = "keith";
  keith.lang = "en";
  Extraction ex = extract_quantities(tokenize(
      "Keith has 20 books . Jason has 21 books . How many books do they have together ?",
      "en"));
  keith.tokens = ex.tokens;
  keith.quantities = ex.quantities;
  keith.gold_tree = ops::add(ops::Q(0), ops::Q(1));
  keith.gold_answer = 41;
  recs.push_back(keith);
  write_records(corpus.path(), recs);

  TempFile model(".ckpt"), log(".json"), report(".json");
  CliRun t = run({"train", "--train", corpus.path(), "--out", model.path(), "--embed-dim", "24",
               "--hidden-dim", "48", "--state-dim", "48", "--epochs", "40", "--stop-at",
               "1.0", "--seed", "3", "--log", log.path()});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_FALSE(nlohmann::json::parse(log.read()).empty());

  CliRun e = run({"eval", "--model", model.path(), "--input", corpus.path(), "--split", "test",
               "--report", report.path(), "--threads", "2"});
  ASSERT_EQ(e.code, 0) << e.err;
  auto reports = nlohmann::json::parse(report.read());
  ASSERT_EQ(reports.size(), 1u);
  EvalReport rep = EvalReport::from_json(reports[0].dump());
  EXPECT_TRUE(rep.consistent());
  EXPECT_EQ(rep.total, 30u);
  EXPECT_GE(rep.accuracy, 0.8);

  CliRun s = run({"solve", "--model", model.path(), "--text",
               "Keith has 20 books . Jason has 21 books . How many books do they have "
               "together ?"});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_EQ(s.out, "+ N0 N1\n41\n");

  CliRun from_stdin = run({"solve", "--model", model.path()},
                       "Keith has 20 books . Jason has 21 books . How many books do they "
                       "have together ?\n");
  EXPECT_EQ(from_stdin.out, s.out);

  EXPECT_EQ(run({"solve", "--model", "/nonexistent.ckpt", "--text", "a 1 b 2"}).code, 1);
}

TEST(Cli, ExperimentRejectsEmptyTcTraining) {
  TempFile config(".json", R"({
    "schema_version": 1,
    "synthetic": {
      "templates": [
        {"name": "add", "tree": "+ N0 N1", "patterns": {"la": ["a {N0} b {N1}"]},
         "value_ranges": [[1, 9], [1, 9]]},
        {"name": "mul", "tree": "* N0 N1", "patterns": {"lb": ["{N0} x {N1} y"]},
         "value_ranges": [[1, 9], [1, 9]]}],
      "num_problems": 10, "dev_problems": 2, "test_problems": 2, "seed": 1},
    "methods": [{"mode": "mixed+cl+tc"}],
    "train": {"max_epochs": 1}
  })");
  CliRun r = run({"experiment", "--config", config.path()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("ConfigError"), std::string::npos) << r.err;
  EXPECT_EQ(r.out.find("epoch"), std::string::npos);
}

}  // namespace
}  // namespace mwpx::cli

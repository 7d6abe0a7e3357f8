// Copyright 2026 The mwpx Authors.
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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Criterion 9 needs the public MathQA release in $MWPX_MATHQA_DIR
// (train.json, dev.json, test.json).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mathqa_refs.h"
#include "mwpx/corpus.h"
#include "mwpx/error.h"
#include "mwpx/expr.h"
#include "mwpx/harness.h"
#include "mwpx/mathqa.h"
#include "mwpx/solver/gradient_check.h"
#include "mwpx/solver/net.h"
#include "mwpx/templates.h"
#include "oracles.h"

namespace mwpx {
namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Verdict evaluator_oracle() {
  const ConstantTable table = ConstantTable::standard();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> val(-50.0, 50.0);
  double worst = 0.0;
  int compared = 0, errors_agreed = 0, mismatches = 0;
  const auto t0 = Clock::now();
  for (int i = 0; i < 10000; ++i) {
    const int k = 1 + static_cast<int>(rng() % 6);
    std::vector<double> q(k);
    for (double& x : q) x = rng() % 9 == 0 ? 0.0 : val(rng);
    auto oracle = testing::random_oracle_tree(rng, 7, k, table);
    ExprTree tree = testing::to_expr(*oracle);
    if (tree.depth() > 8) ++mismatches;
    auto want = testing::oracle_eval(*oracle, q);
    try {
      const double got = evaluate(tree, q, table);
      if (!want) {
        ++mismatches;
        continue;
      }
      worst = std::max(worst, testing::rel_diff(got, *want));
      ++compared;
    } catch (const Error&) {
      if (want) ++mismatches; else ++errors_agreed;
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && worst <= 1e-12 && secs < 10.0,
          fmt("10000 trees (%d valued, %d errors agreed), max rel err %.2e, "
              "%d mismatches, %.2f s",
              compared, errors_agreed, worst, mismatches, secs)};
}

Verdict expansion_rules() {
  const mathqa::RuleTable rules = mathqa::RuleTable::standard();
  std::mt19937_64 rng(99);
  double worst = 0.0;
  std::string worst_name;
  std::set<std::string> covered;
  for (const auto& [name, form] : testing::closed_forms()) {
    const auto& [arity, ref] = form;
    std::string call = name + "(n0";
    for (int i = 1; i < arity; ++i) call += ",n" + std::to_string(i);
    ConstantTable t = ConstantTable::standard();
    ExprTree tree = mathqa::expand_program(mathqa::parse_formula(call + ")"), rules, t);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> args = testing::random_args(name, arity, rng);
      const double err = testing::rel_diff(evaluate(tree, args, t), ref(args));
      if (err > worst) {
        worst = err;
        worst_name = name;
      }
    }
    covered.insert(name);
  }
  const auto adapted = rules.adapted_names();
  const bool all_adapted =
      std::set<std::string>(adapted.begin(), adapted.end()) == covered;
  int raised = 0;
  for (const std::string& name : rules.filtered_names()) {
    ConstantTable t = ConstantTable::standard();
    try {
      mathqa::expand_program(mathqa::parse_formula(name + "(n0,n1)"), rules, t);
    } catch (const Error& e) {
      if (e.code() == Errc::kFilteredOperator) ++raised;
    }
  }
  // volume_sphere against (4/3) pi r^3 at a few radii.
  ConstantTable t = ConstantTable::standard();
  ExprTree sphere =
      mathqa::expand_program(mathqa::parse_formula("volume_sphere(n0)"), rules, t);
  double sphere_err = 0.0;
  for (double r : {0.5, 1.0, 3.0, 7.25}) {
    const double want = 4.0 / 3.0 * std::numbers::pi * r * r * r;
    sphere_err = std::max(sphere_err, testing::rel_diff(evaluate(sphere, std::vector{r}, t), want));
  }
  const bool pass = all_adapted && worst <= 1e-9 && sphere_err <= 1e-9 &&
                    raised == static_cast<int>(rules.filtered_names().size()) &&
                    raised == 17;
  return {pass, fmt("%zu adapted operators x 100 inputs, max rel err %.2e (%s), "
                    "volume_sphere err %.2e, %d/17 filtered raise",
                    covered.size(), worst, worst_name.empty() ? "-" : worst_name.c_str(),
                    sphere_err, raised)};
}

Verdict answer_boundary() {
  const bool accept = check_answer(4.00039, 4.0, 1e-4);
  const bool reject = !check_answer(4.001, 4.0, 1e-4);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> g(-1e4, 1e4), d(0.0, 1e-3);
  int boundary_failures = 0;
  for (int i = 0; i < 100000; ++i) {
    const double gold = g(rng);
    const double pred = gold * (1.0 + d(rng));
    if (gold == 0.0) continue;
    const double err = std::abs(pred - gold) / std::abs(gold);
    if (!check_answer(pred, gold, err)) ++boundary_failures;
    if (err > 0 && check_answer(pred, gold, std::nextafter(err, 0.0))) ++boundary_failures;
  }
  return {accept && reject && boundary_failures == 0,
          fmt("9.75e-5 %s, 2.5e-4 %s, %d boundary failures over 100000 draws",
              accept ? "accepted" : "REJECTED", reject ? "rejected" : "ACCEPTED",
              boundary_failures)};
}

Verdict gradient_verification() {
  const auto t0 = Clock::now();
  const auto ce = solver::tiny_gradient_check(false, 1);
  const auto joint = solver::tiny_gradient_check(true, 1);
  const double secs = seconds_since(t0);
  return {ce.max_relative_error < 1e-5 && joint.max_relative_error < 1e-5 && secs < 60.0,
          fmt("d_h=8, CE %.2e (%s), CE+NT-Xent %.2e (%s), %.2f s", ce.max_relative_error,
              ce.worst_tensor.c_str(), joint.max_relative_error, joint.worst_tensor.c_str(),
              secs)};
}

Verdict nt_xent_values() {
  solver::Mat same(2, 2), orth(2, 2);
  same << 1, 0, 1, 0;
  orth << 1, 0, 0, 1;
  const double a = solver::nt_xent_loss(same, same, 1.0);
  const double b = solver::nt_xent_loss(orth, orth, 1.0);
  return {std::abs(a - 0.693147) <= 1e-6 && std::abs(b - 0.313262) <= 1e-6,
          fmt("identical pair %.7f (want 0.693147), orthogonal pair %.7f (want 0.313262)",
              a, b)};
}

// Desk-scale experiments shared by criteria 6, 7, 8 and 10.
ExperimentConfig desk_experiment(solver::TrainMode mode, std::vector<std::string> langs) {
  ExperimentConfig c;
  c.name = "desk";
  c.synthetic = desk_synth_config(600, 100, 100, 11);
  c.methods = {{mode, std::move(langs)}};
  c.train.stop_at_dev_accuracy = 0.99;
  c.seed = 11;
  return c;
}

ExperimentConfig half_paired_experiment() {
  ExperimentConfig c;
  c.name = "half_paired";
  c.synthetic = half_paired_synth_config(600, 100, 100, 11);
  c.methods = {{solver::TrainMode::kMixedCLTC, {}}};
  c.train.max_epochs = 30;
  c.seed = 11;
  return c;
}

double cell(const ExperimentResult& r, const std::string& lang) {
  for (const auto& [key, report] : r.rows.at(0).cells) {
    if (key.second == lang) return 100.0 * report.accuracy;
  }
  return -1.0;
}

std::map<std::string, std::string> first_reports;  // criterion -> to_json

Verdict desk_mixed() {
  const auto t0 = Clock::now();
  ExperimentResult r = run_experiment(desk_experiment(solver::TrainMode::kMixed, {}));
  const double secs = seconds_since(t0);
  first_reports["6"] = r.to_json();
  const double a = cell(r, "synthA"), b = cell(r, "synthB");
  return {a >= 90.0 && b >= 90.0 && secs < 600.0,
          fmt("mixed: synthA %.1f%%, synthB %.1f%%, %d epochs, %.1f s", a, b,
              static_cast<int>(r.rows[0].training.epochs.size()), secs)};
}

Verdict desk_mono() {
  ExperimentResult r =
      run_experiment(desk_experiment(solver::TrainMode::kMono, {"synthA"}));
  first_reports["7"] = r.to_json();
  const double a = cell(r, "synthA"), b = cell(r, "synthB");
  return {a >= 90.0 && b <= 50.0 && a - b > 30.0,
          fmt("mono(synthA): synthA %.1f%%, synthB %.1f%%, gap %.1f points", a, b, a - b)};
}

Verdict template_sensitivity() {
  const ExperimentConfig config = half_paired_experiment();
  ExperimentResult r = run_experiment(config);
  first_reports["8"] = r.to_json();

  // Paired-ness of each template key, counted directly over the train split.
  const ConstantTable table = ConstantTable::standard();
  ExperimentData data = load_experiment_data(config, table);
  std::map<std::string, std::set<std::string>> langs_of_key;
  for (const ProblemRecord& rec : data.train) {
    langs_of_key[template_of(*rec.gold_tree).canonical_key].insert(rec.lang);
  }
  auto paired = [&](const ProblemRecord& rec) {
    auto it = langs_of_key.find(template_of(*rec.gold_tree).canonical_key);
    return it != langs_of_key.end() && it->second.size() >= 2;
  };

  std::map<std::string, bool> test_paired;
  for (const ProblemRecord& rec : data.test) test_paired[rec.id] = paired(rec);
  CategoryCount on_paired, on_unpaired;
  for (const auto& [key, report] : r.rows.at(0).cells) {
    for (const RecordOutcome& o : report.records) {
      CategoryCount& c = test_paired.at(o.id) ? on_paired : on_unpaired;
      ++c.total;
      if (o.outcome == Outcome::kSolved) ++c.solved;
    }
  }
  const double acc_p = on_paired.total ? 100.0 * on_paired.solved / on_paired.total : 0.0;
  const double acc_u =
      on_unpaired.total ? 100.0 * on_unpaired.solved / on_unpaired.total : 0.0;

  std::set<std::string> kept, want_kept;
  for (const ProblemRecord& rec :
       filter_tc(data.train, group_by_template(data.train, false))) {
    kept.insert(rec.id);
  }
  std::size_t unpaired_train = 0;
  for (const ProblemRecord& rec : data.train) {
    if (paired(rec)) want_kept.insert(rec.id); else ++unpaired_train;
  }
  const bool drop_exact = kept == want_kept && unpaired_train > 0;
  return {on_paired.total > 0 && on_unpaired.total > 0 && acc_p >= acc_u && drop_exact,
          fmt("mixed+cl+tc: paired-template test %.1f%% (%zu), unpaired %.1f%% (%zu); "
              "filter_tc kept %zu of %zu train, dropped set %s",
              acc_p, on_paired.total, acc_u, on_unpaired.total, kept.size(),
              data.train.size(), drop_exact ? "exact" : "WRONG")};
}

Verdict mathqa_counts() {
  const char* dir = std::getenv("MWPX_MATHQA_DIR");
  if (!dir || !*dir) {
    return {true, "soft: not run, MWPX_MATHQA_DIR is unset"};
  }
  const std::map<std::string, int> want = {{"train", 15302}, {"dev", 2263}, {"test", 1532}};
  std::vector<mathqa::RawRecord> raw;
  for (const auto& [split, _] : want) {
    auto part = mathqa::load_raw((std::filesystem::path(dir) / (split + ".json")).string(), split);
    raw.insert(raw.end(), part.begin(), part.end());
  }
  ConstantTable table = ConstantTable::standard();
  auto result = mathqa::adapt_dataset(raw, mathqa::AdaptConfig{}, mathqa::RuleTable::standard(),
                                      table);
  std::string detail = "soft:";
  bool within = true;
  for (const auto& [split, target] : want) {
    auto it = result.report.per_split.find(split);
    const int got = it == result.report.per_split.end() ? 0 : it->second.kept;
    const double dev = 100.0 * (got - target) / target;
    within = within && std::abs(dev) <= 5.0;
    detail += fmt(" %s %d (target %d, %+.1f%%)", split.c_str(), got, target, dev);
  }
  detail += within ? ", within 5%" : ", deviation reported";
  return {true, detail};
}

Verdict determinism() {
  std::vector<std::string> differing;
  if (run_experiment(desk_experiment(solver::TrainMode::kMixed, {})).to_json() !=
      first_reports["6"]) {
    differing.push_back("6");
  }
  if (run_experiment(desk_experiment(solver::TrainMode::kMono, {"synthA"})).to_json() !=
      first_reports["7"]) {
    differing.push_back("7");
  }
  if (run_experiment(half_paired_experiment()).to_json() != first_reports["8"]) {
    differing.push_back("8");
  }
  std::string which;
  for (const auto& d : differing) which += " " + d;
  const bool complete = first_reports.size() == 3;
  return {complete && differing.empty(),
          !complete ? std::string("earlier criteria did not produce reports")
          : differing.empty() ? std::string("reruns of 6, 7, 8 are byte-identical")
                              : "reports differ for" + which};
}

}  // namespace
}  // namespace mwpx

int main() {
  using mwpx::Verdict;
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"evaluator oracle equivalence", mwpx::evaluator_oracle},
      {"expansion-rule suite", mwpx::expansion_rules},
      {"answer-check boundary", mwpx::answer_boundary},
      {"gradient verification", mwpx::gradient_verification},
      {"NT-Xent closed values", mwpx::nt_xent_values},
      {"desk-scale end-to-end", mwpx::desk_mixed},
      {"cross-lingual failure", mwpx::desk_mono},
      {"CL+TC template sensitivity", mwpx::template_sensitivity},
      {"MathQA kept counts", mwpx::mathqa_counts},
      {"determinism", mwpx::determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s criterion %zu (%s): %s\n", v.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

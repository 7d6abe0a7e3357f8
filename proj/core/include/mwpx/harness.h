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

#ifndef MWPX_HARNESS_H_
#define MWPX_HARNESS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mwpx/corpus.h"
#include "mwpx/solver/model.h"
#include "mwpx/solver/train.h"

namespace mwpx {

enum class Outcome { kSolved, kInvalidTree, kEvalError, kWrongValue };

std::string_view outcome_name(Outcome outcome);

struct RecordOutcome {
  std::string id;
  std::string category;
  Outcome outcome = Outcome::kInvalidTree;
  std::string prediction;  // emitted prefix tokens
  std::optional<double> value;
  double gold = 0.0;
  std::string detail;
};

struct CategoryCount {
  std::size_t solved = 0;
  std::size_t total = 0;

  bool operator==(const CategoryCount&) const = default;
};

struct EvalReport {
  std::string dataset;
  std::string lang;
  std::size_t total = 0;
  std::size_t solved = 0;
  double accuracy = 0.0;
  std::map<std::string, CategoryCount> breakdown;
  // invalid_tree, eval_error and wrong_value are always present.
  std::map<std::string, std::size_t> unsolved_reasons;
  std::vector<RecordOutcome> records;  // sorted by id

  // Summary fields rebuilt from the per-record log.
  static EvalReport from_records(std::string dataset, std::string lang,
                                 std::vector<RecordOutcome> records);
  bool consistent() const;

  std::string to_json() const;
  static EvalReport from_json(std::string_view text);
  std::string summary() const;
};

// Classifies one record. Never throws on model output.
RecordOutcome solve_one(const solver::Model& model, const ProblemRecord& record,
                        int max_len, double threshold);

// threads > 1 splits records across worker threads; results are identical.
EvalReport solve_accuracy(const solver::Model& model,
                          std::span<const ProblemRecord> records,
                          double threshold = kDefaultAnswerThreshold,
                          int max_len = 32, std::string dataset = {},
                          std::string lang = {}, int threads = 1);

// One row of the experiment table.
struct MethodSpec {
  solver::TrainMode mode = solver::TrainMode::kMixed;
  std::vector<std::string> languages;  // training languages; empty = all

  std::string label() const;  // e.g. "mono(synthA)", "mixed+cl"
};

inline constexpr int kExperimentSchemaVersion = 1;

struct ExperimentConfig {
  std::string name = "experiment";
  // Corpus: generated from `synthetic` when set, otherwise read from
  // record files whose split fields choose train / dev / test.
  std::optional<SynthConfig> synthetic;
  std::vector<std::string> corpus_files;
  std::vector<MethodSpec> methods;
  std::vector<std::string> eval_langs;  // empty = every test language
  solver::ModelConfig model;
  solver::TrainConfig train;
  std::uint64_t seed = 1;
  int threads = 1;

  static ExperimentConfig from_json(std::string_view text);
  std::string to_json() const;
};

struct ExperimentRow {
  MethodSpec method;
  solver::TrainResult training;
  // (eval set, lang) -> report on that test split.
  std::map<std::pair<std::string, std::string>, EvalReport> cells;
};

struct ExperimentResult {
  std::string name;
  std::vector<ExperimentRow> rows;

  std::string table() const;    // aligned, one column per (set, lang)
  std::string to_json() const;  // deterministic given config and seed
};

// Validates every method's training set before any training starts, so a
// filter_tc that leaves nothing surfaces as ConfigError up front.
// `models`, when given, receives the trained model of each row.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                std::vector<solver::Model>* models = nullptr);

// Corpus of an experiment config, split by record split.
struct ExperimentData {
  std::vector<ProblemRecord> train, dev, test;
};
ExperimentData load_experiment_data(const ExperimentConfig& config,
                                    const ConstantTable& constants);

}  // namespace mwpx

#endif  // MWPX_HARNESS_H_

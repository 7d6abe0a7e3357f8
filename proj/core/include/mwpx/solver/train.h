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

#ifndef MWPX_SOLVER_TRAIN_H_
#define MWPX_SOLVER_TRAIN_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mwpx/corpus.h"
#include "mwpx/solver/model.h"
#include "mwpx/solver/net.h"

namespace mwpx::solver {

enum class TrainMode { kMono, kMixed, kMixedCL, kMixedCLTC };

std::string_view train_mode_name(TrainMode mode);  // mono, mixed, mixed+cl, ...
std::optional<TrainMode> train_mode_from_name(std::string_view name);

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double cross_entropy = 0.0;
  double contrastive = 0.0;
  double learning_rate = 0.0;
  double dev_accuracy = 0.0;
  double grad_norm = 0.0;  // mean pre-clipping norm
};

struct TrainConfig {
  TrainMode mode = TrainMode::kMixed;
  // Training languages. kMono needs exactly one; empty means all present.
  std::vector<std::string> languages;
  int max_epochs = 150;
  int patience = 30;
  int batch_size = 32;
  double learning_rate = 0.1;
  double end_learning_rate = 0.0;
  double decay_power = 1.0;
  double momentum = 0.9;
  double clip_norm = 5.0;  // <= 0 disables clipping
  double lambda = 1.0;
  double temperature = 0.1;
  NegativeSet negatives = NegativeSet::kOtherPositives;
  bool mask_constants = false;
  int max_decode_len = 32;
  double threshold = kDefaultAnswerThreshold;
  // Stops once dev accuracy reaches this value; > 1 never triggers.
  double stop_at_dev_accuracy = 2.0;
  std::uint64_t seed = 1;
  std::function<void(const EpochLog&)> on_epoch;

  // Schedule reported for the pretrained-encoder setting.
  static TrainConfig pretrained_preset();
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  int best_epoch = 0;  // 1-based; 0 when no epoch ran
  double best_dev_accuracy = 0.0;
  std::size_t train_size = 0;
  std::vector<std::string> languages;
};

// Applies the language filter and, for kMixedCLTC, filter_tc. Throws
// ConfigError when the result is empty or the mode's language requirement
// is not met.
std::vector<ProblemRecord> select_training_records(
    std::span<const ProblemRecord> records, const TrainConfig& config);

// Vocabulary from the given records, fresh parameters from the seed.
Model make_model(const ModelConfig& config, const ConstantTable& constants,
                 std::span<const ProblemRecord> train_records,
                 std::uint64_t seed);

// Trains in place on select_training_records(train_records). With a
// non-empty dev set the parameters of the best dev epoch are kept.
TrainResult train(Model& model, std::span<const ProblemRecord> train_records,
                  std::span<const ProblemRecord> dev_records,
                  const TrainConfig& config);

double solve_rate(const Model& model, std::span<const ProblemRecord> records,
                  int max_len, double threshold = kDefaultAnswerThreshold);

}  // namespace mwpx::solver

#endif  // MWPX_SOLVER_TRAIN_H_

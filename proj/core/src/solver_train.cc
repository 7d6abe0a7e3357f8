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

#include "mwpx/solver/train.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "mwpx/error.h"
#include "mwpx/templates.h"

namespace mwpx::solver {

std::string_view train_mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::kMono: return "mono";
    case TrainMode::kMixed: return "mixed";
    case TrainMode::kMixedCL: return "mixed+cl";
    case TrainMode::kMixedCLTC: return "mixed+cl+tc";
  }
  return "?";
}

std::optional<TrainMode> train_mode_from_name(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  for (TrainMode m : {TrainMode::kMono, TrainMode::kMixed, TrainMode::kMixedCL,
                      TrainMode::kMixedCLTC}) {
    if (train_mode_name(m) == lower) return m;
  }
  return std::nullopt;
}

TrainConfig TrainConfig::pretrained_preset() {
  TrainConfig c;
  c.learning_rate = 3e-5;
  c.max_epochs = 150;
  c.patience = 30;
  return c;
}

namespace {

bool contrastive(TrainMode mode) {
  return mode == TrainMode::kMixedCL || mode == TrainMode::kMixedCLTC;
}

}  // namespace

std::vector<ProblemRecord> select_training_records(
    std::span<const ProblemRecord> records, const TrainConfig& config) {
  if (config.mode == TrainMode::kMono && config.languages.size() != 1) {
    throw Error(Errc::kConfigError, "mono training needs exactly one language");
  }
  std::set<std::string> wanted(config.languages.begin(), config.languages.end());
  std::vector<ProblemRecord> out;
  for (const ProblemRecord& r : records) {
    if (!wanted.empty() && !wanted.contains(r.lang)) continue;
    if (!r.gold_tree) {
      throw Error(Errc::kMissingGoldTree, r.id + " has no gold tree");
    }
    out.push_back(r);
  }
  if (contrastive(config.mode)) {
    std::set<std::string> langs;
    for (const ProblemRecord& r : out) langs.insert(r.lang);
    if (langs.size() < 2) {
      throw Error(Errc::kConfigError,
                  "contrastive modes need training data in two languages");
    }
  }
  if (config.mode == TrainMode::kMixedCLTC) {
    TemplateGroups groups = group_by_template(out, config.mask_constants);
    out = filter_tc(out, groups);
    if (out.empty()) {
      throw Error(Errc::kConfigError,
                  "no training record has a cross-lingual template partner");
    }
  }
  if (out.empty()) throw Error(Errc::kConfigError, "empty training set");
  return out;
}

Model make_model(const ModelConfig& config, const ConstantTable& constants,
                 std::span<const ProblemRecord> train_records,
                 std::uint64_t seed) {
  return Model::create(
      config, Vocab::build(constants, train_records, config.max_quantity_tokens),
      seed);
}

double solve_rate(const Model& model, std::span<const ProblemRecord> records,
                  int max_len, double threshold) {
  if (records.empty()) return 0.0;
  std::size_t solved = 0;
  for (const ProblemRecord& r : records) solved += solves(model, r, max_len, threshold);
  return static_cast<double>(solved) / static_cast<double>(records.size());
}

TrainResult train(Model& model, std::span<const ProblemRecord> train_records,
                  std::span<const ProblemRecord> dev_records,
                  const TrainConfig& config) {
  if (config.batch_size <= 0 || config.max_epochs < 0 || config.patience <= 0) {
    throw Error(Errc::kConfigError, "batch size and patience must be positive");
  }
  std::vector<ProblemRecord> records = select_training_records(train_records, config);
  TrainResult result;
  result.train_size = records.size();
  {
    std::set<std::string> langs;
    for (const ProblemRecord& r : records) langs.insert(r.lang);
    result.languages.assign(langs.begin(), langs.end());
  }

  std::vector<Example> examples;
  examples.reserve(records.size());
  for (const ProblemRecord& r : records) examples.push_back(make_example(model.vocab, r));

  const bool use_cl = contrastive(config.mode);
  std::optional<PairSampler> sampler;
  if (use_cl) {
    sampler.emplace(records,
                    config.mode == TrainMode::kMixedCLTC ? ContrastMode::kCLTC
                                                         : ContrastMode::kCL,
                    config.mask_constants);
  }
  LossConfig loss_config;
  loss_config.contrastive = use_cl;
  loss_config.lambda = config.lambda;
  loss_config.temperature = config.temperature;
  loss_config.negatives = config.negatives;

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t B = static_cast<std::size_t>(config.batch_size);
  const std::size_t batches = (examples.size() + B - 1) / B;
  const double total_steps =
      static_cast<double>(batches) * std::max(config.max_epochs, 1);

  ModelParams grad = ModelParams::zeros_like(model.params);
  ModelParams velocity = ModelParams::zeros_like(model.params);
  ModelParams best = model.params;
  auto param_t = model.params.tensors();
  auto grad_t = grad.tensors();
  auto vel_t = velocity.tensors();

  std::size_t step = 0;
  int since_best = 0;
  bool have_best = false;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochLog log;
    log.epoch = epoch;
    for (std::size_t start = 0; start < order.size(); start += B) {
      const std::size_t end = std::min(order.size(), start + B);
      std::vector<const Example*> anchors, positives;
      for (std::size_t i = start; i < end; ++i) {
        anchors.push_back(&examples[order[i]]);
        if (use_cl) positives.push_back(&examples[sampler->sample(order[i], rng)]);
      }
      LossValue lv = batch_loss(model, anchors, positives, loss_config, &grad);
      log.loss += lv.total;
      log.cross_entropy += lv.cross_entropy;
      log.contrastive += lv.contrastive;

      double sq = 0.0;
      for (const auto& t : grad_t) sq += t.tensor->squaredNorm();
      const double norm = std::sqrt(sq);
      log.grad_norm += norm;
      const double clip =
          config.clip_norm > 0.0 && norm > config.clip_norm ? config.clip_norm / norm : 1.0;
      const double frac = std::min(1.0, static_cast<double>(step) / total_steps);
      const double lr =
          (config.learning_rate - config.end_learning_rate) *
              std::pow(1.0 - frac, config.decay_power) +
          config.end_learning_rate;
      log.learning_rate = lr;
      for (std::size_t k = 0; k < param_t.size(); ++k) {
        Mat& v = *vel_t[k].tensor;
        v = config.momentum * v + clip * *grad_t[k].tensor;
        *param_t[k].tensor -= lr * v;
      }
      ++step;
    }
    const double nb = static_cast<double>(batches);
    log.loss /= nb;
    log.cross_entropy /= nb;
    log.contrastive /= nb;
    log.grad_norm /= nb;
    if (!model.params.all_finite()) {
      throw Error(Errc::kNonFiniteResult,
                  "parameters diverged in epoch " + std::to_string(epoch));
    }

    if (!dev_records.empty()) {
      log.dev_accuracy = solve_rate(model, dev_records, config.max_decode_len,
                                    config.threshold);
    }
    result.epochs.push_back(log);
    if (config.on_epoch) config.on_epoch(log);

    if (!have_best || log.dev_accuracy > result.best_dev_accuracy) {
      have_best = true;
      result.best_dev_accuracy = log.dev_accuracy;
      result.best_epoch = epoch;
      best = model.params;
      since_best = 0;
    } else if (!dev_records.empty()) {
      ++since_best;
    }
    if (dev_records.empty()) {
      best = model.params;
      result.best_epoch = epoch;
    }
    if (!dev_records.empty() && since_best >= config.patience) break;
    if (!dev_records.empty() && log.dev_accuracy >= config.stop_at_dev_accuracy) break;
  }
  if (have_best) model.params = std::move(best);
  return result;
}

}  // namespace mwpx::solver

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

#include "mwpx/solver/gradient_check.h"

#include <algorithm>
#include <cmath>

#include "mwpx/error.h"
#include "mwpx/solver/train.h"

namespace mwpx::solver {

GradCheckResult gradient_check(const Model& model,
                               std::span<const Example* const> anchors,
                               std::span<const Example* const> positives,
                               const LossConfig& config, double eps) {
  Model probe = model;
  ModelParams analytic;
  const std::uint64_t base =
      batch_loss(probe, anchors, positives, config, &analytic).pool_signature;

  GradCheckResult result;
  auto params = probe.params.tensors();
  auto grads = analytic.tensors();
  for (std::size_t k = 0; k < params.size(); ++k) {
    Mat& w = *params[k].tensor;
    const Mat& g = *grads[k].tensor;
    TensorCheck tc{params[k].name, 0.0, 0};
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        const double saved = w(i, j);
        w(i, j) = saved + eps;
        const LossValue up = batch_loss(probe, anchors, positives, config);
        w(i, j) = saved - eps;
        const LossValue down = batch_loss(probe, anchors, positives, config);
        w(i, j) = saved;
        if (up.pool_signature != base || down.pool_signature != base) {
          ++tc.kinks;
          continue;
        }
        const double numeric = (up.total - down.total) / (2.0 * eps);
        const double a = g(i, j);
        const double scale =
            std::max({std::abs(a), std::abs(numeric), kGradCheckFloor});
        tc.max_relative_error = std::max(tc.max_relative_error, std::abs(a - numeric) / scale);
        ++tc.entries;
      }
    }
    result.entries += tc.entries;
    result.kinks += tc.kinks;
    if (tc.max_relative_error >= result.max_relative_error) {
      result.max_relative_error = tc.max_relative_error;
      result.worst_tensor = tc.name;
    }
    result.tensors.push_back(std::move(tc));
  }
  return result;
}

GradCheckResult gradient_check(const Model& model,
                               std::span<const ProblemRecord> anchors,
                               std::span<const ProblemRecord> positives,
                               const LossConfig& config, double eps) {
  std::vector<Example> a, p;
  for (const ProblemRecord& r : anchors) a.push_back(make_example(model.vocab, r));
  for (const ProblemRecord& r : positives) p.push_back(make_example(model.vocab, r));
  std::vector<const Example*> ap, pp;
  for (const Example& e : a) ap.push_back(&e);
  for (const Example& e : p) pp.push_back(&e);
  return gradient_check(model, ap, pp, config, eps);
}

GradCheckResult tiny_gradient_check(bool contrastive, std::uint64_t seed,
                                    double eps) {
  ConstantTable constants = ConstantTable::standard();
  std::vector<ProblemRecord> corpus =
      generate_synthetic_bilingual(desk_synth_config(3, 0, 0, seed), constants);
  if (corpus.empty()) throw Error(Errc::kConfigError, "empty synthetic corpus");
  const std::string first_lang = corpus.front().lang;
  std::vector<ProblemRecord> lang_a, lang_b;
  for (ProblemRecord& r : corpus) {
    (r.lang == first_lang ? lang_a : lang_b).push_back(std::move(r));
  }
  if (lang_a.size() != lang_b.size() || lang_a.empty()) {
    throw Error(Errc::kConfigError, "synthetic corpus is not parallel");
  }
  std::vector<ProblemRecord> all = lang_a;
  all.insert(all.end(), lang_b.begin(), lang_b.end());

  ModelConfig mc;
  mc.embed_dim = 6;
  mc.hidden_dim = 8;
  mc.state_dim = 8;
  mc.max_quantity_tokens = 4;
  mc.init_range = 0.6;
  Model model = make_model(mc, constants, all, seed);

  LossConfig lc;
  lc.contrastive = contrastive;
  lc.temperature = 1.0;
  lc.lambda = 1.0;
  return gradient_check(model, lang_a, lang_b, lc, eps);
}

}  // namespace mwpx::solver

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

#ifndef MWPX_SOLVER_GRADIENT_CHECK_H_
#define MWPX_SOLVER_GRADIENT_CHECK_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mwpx/corpus.h"
#include "mwpx/solver/model.h"
#include "mwpx/solver/net.h"

namespace mwpx::solver {

struct TensorCheck {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t entries = 0;
  std::size_t kinks = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  std::vector<TensorCheck> tensors;
  std::size_t entries = 0;
  // Entries whose +/- eps probes changed a max-pool selection. The loss has
  // no derivative there, so they are counted and left out of the maximum.
  std::size_t kinks = 0;
};

// Relative error |a - n| / max(|a|, |n|, floor).
inline constexpr double kGradCheckFloor = 1e-4;

// Compares batch_loss gradients with central differences
// (f(x + eps) - f(x - eps)) / 2 eps over every parameter entry.
GradCheckResult gradient_check(const Model& model,
                               std::span<const Example* const> anchors,
                               std::span<const Example* const> positives,
                               const LossConfig& config, double eps = 1e-5);

// Record-level form: anchors[i] is paired with positives[i] when the loss is
// contrastive.
GradCheckResult gradient_check(const Model& model,
                               std::span<const ProblemRecord> anchors,
                               std::span<const ProblemRecord> positives,
                               const LossConfig& config, double eps = 1e-5);

// A tiny random model (d_h = 8) on a few synthetic problems in two
// languages, checked with or without the contrastive term.
GradCheckResult tiny_gradient_check(bool contrastive, std::uint64_t seed,
                                    double eps = 1e-5);

}  // namespace mwpx::solver

#endif  // MWPX_SOLVER_GRADIENT_CHECK_H_

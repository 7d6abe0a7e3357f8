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

#ifndef MWPX_SOLVER_MODEL_H_
#define MWPX_SOLVER_MODEL_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "mwpx/corpus.h"
#include "mwpx/expr.h"

namespace mwpx::solver {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Squashing function applied in the copy and attention scores.
enum class Squash { kTanh, kSigmoid };

struct ModelConfig {
  int embed_dim = 64;    // d_e
  int hidden_dim = 128;  // d_h, split evenly between the two directions
  int state_dim = 128;   // d_s
  Squash squash = Squash::kTanh;
  int max_quantity_tokens = 16;  // N0.. entries in the source vocabulary
  double init_range = 0.08;

  bool operator==(const ModelConfig&) const = default;
};

// Target side: operators, then constants in table order, then <bos>, <eos>.
// One extra embedding row (copy_symbol()) stands for any copied quantity.
// Source side: <unk>, N0..N{max-1}, then corpus words in sorted order.
class Vocab {
 public:
  static constexpr std::string_view kBos = "<bos>";
  static constexpr std::string_view kEos = "<eos>";
  static constexpr std::string_view kUnk = "<unk>";

  Vocab() = default;
  static Vocab build(const ConstantTable& constants,
                     std::span<const ProblemRecord> records,
                     int max_quantity_tokens);
  static Vocab from_parts(ConstantTable constants,
                          std::vector<std::string> source_tokens);

  int target_size() const { return static_cast<int>(target_.size()); }
  int bos() const { return target_size() - 2; }
  int eos() const { return target_size() - 1; }
  int copy_symbol() const { return target_size(); }
  const std::vector<std::string>& target_symbols() const { return target_; }
  std::optional<int> target_index(std::string_view symbol) const;

  int source_size() const { return static_cast<int>(source_.size()); }
  int unk() const { return 0; }
  int source_index(std::string_view token) const;  // unk() when unknown
  const std::vector<std::string>& source_tokens() const { return source_; }

  const ConstantTable& constants() const { return constants_; }

  bool operator==(const Vocab& other) const;

 private:
  void index();

  ConstantTable constants_;
  std::vector<std::string> target_;
  std::vector<std::string> source_;
  std::unordered_map<std::string, int> target_index_;
  std::unordered_map<std::string, int> source_index_;
};

// LSTM cell: rows of w and b are gate blocks [input; forget; cell; output];
// w acts on [x; h_prev].
struct LstmWeights {
  Mat w;
  Mat b;  // column vector
};

struct NamedTensor {
  std::string name;
  Mat* tensor;
};
struct ConstNamedTensor {
  std::string name;
  const Mat* tensor;
};

struct ModelParams {
  Mat src_embed;               // |source| x d_e
  LstmWeights encoder[2][2];   // [layer][forward, backward], hidden d_h/2
  Mat tgt_embed;               // (|target|+1) x d_e
  Mat w_copy;                  // d_h x d_s
  Mat w_attn;                  // d_h x d_s
  Mat b_attn;                  // 1 x 1
  Mat w_gen;                   // d_s x |target|
  Mat b_gen;                   // |target| x 1
  Mat w_fuse;                  // d_s x (d_e + 2 d_h)
  LstmWeights decoder;         // input d_s, state d_s

  // Uniform(-r, r) matrices, zero biases, forget-gate biases +1.
  static ModelParams init(const ModelConfig& config, int source_size,
                          int target_size, std::uint64_t seed);
  static ModelParams zeros_like(const ModelParams& other);

  std::vector<NamedTensor> tensors();
  std::vector<ConstNamedTensor> tensors() const;
  std::size_t num_parameters() const;
  bool all_finite() const;
  void set_zero();
};

struct Model {
  ModelConfig config;
  Vocab vocab;
  ModelParams params;

  static Model create(const ModelConfig& config, Vocab vocab,
                      std::uint64_t seed);
};

// Binary checkpoint, little-endian:
//   magic "MWPXCKPT", u32 version, u32 config-json length, config json,
//   u32 constant count, per constant (u32 id length, id, f64 value),
//   u32 source count, per token (u32 length, bytes),
//   u32 tensor count, per tensor (u32 name length, name, u32 rows, u32 cols,
//   rows*cols f64 in row-major order).
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const Model& model);
// Throws CheckpointError on a malformed file, or when `expected` is given
// and the stored vocabulary differs from it.
Model load_checkpoint(const std::string& path, const Vocab* expected = nullptr);

}  // namespace mwpx::solver

#endif  // MWPX_SOLVER_MODEL_H_

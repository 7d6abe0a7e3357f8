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

#ifndef MWPX_SOLVER_NET_H_
#define MWPX_SOLVER_NET_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mwpx/corpus.h"
#include "mwpx/expr.h"
#include "mwpx/solver/model.h"

namespace mwpx::solver {

// Half-open range of piece indices forming one word.
struct PieceRange {
  int begin = 0;
  int end = 0;
};

// Rows of `pieces` are piece vectors; returns one averaged row per range.
// Ranges must partition [0, pieces.rows()) in order; an empty range throws
// EmptyGroup.
Mat pool_pieces(const Mat& pieces, std::span<const PieceRange> words);

struct EncoderOutput {
  Mat memory;  // one row m_i per word, d_h columns
  Vec z;       // L2-normalized max-pool of memory rows
  int unknown_tokens = 0;
};

// token_ids index the source vocabulary. An empty grouping means one piece
// per word. Out-of-range ids fall back to <unk> and are counted.
EncoderOutput encode(const Model& model, std::span<const int> token_ids,
                     std::span<const PieceRange> grouping = {});

struct DecoderState {
  Vec h;
  Vec c;
  int step = 0;
};

DecoderState initial_state(const Model& model);

// Per-sequence values that do not change across decoding steps.
struct DecoderContext {
  Mat memory;
  Mat copy_keys;  // squash(M W_c)
  Mat attn_keys;  // squash(M W_a)
  std::vector<int> quantity_positions;
};

DecoderContext make_context(const Model& model, const Mat& memory,
                            std::span<const bool> copy_mask);

struct StepOutput {
  Vec gen_scores;   // |target|
  Vec copy_scores;  // one per source position, -inf where masked
  DecoderState next;
};

// prev_symbol is a target index, or vocab.copy_symbol() after a copy.
// Scores are those of the token following prev_symbol.
StepOutput decode_step(const Model& model, const DecoderContext& context,
                       const DecoderState& state, int prev_symbol);

// Single softmax over [gen; copy], copy mass merged per quantity index.
// position_quantity[i] is the quantity index at source position i or -1.
// Result has gen.size() + num_quantities entries. position_probs, when
// given, receives the pre-merge probability of every source position.
Vec output_distribution(const Vec& gen_scores, const Vec& copy_scores,
                        std::span<const int> position_quantity,
                        int num_quantities, Vec* position_probs = nullptr);

// Which vectors act as negatives for anchor i in the contrastive loss.
enum class NegativeSet {
  kOtherPositives,  // z+_j for j != i
  kAllOthers,       // z+_j and z_j for j != i
};

// Rows of z and z_pos are unit vectors. Mean over rows. Gradients with
// respect to z and z_pos are written when the pointers are non-null.
double nt_xent_loss(const Mat& z, const Mat& z_pos, double temperature,
                    NegativeSet negatives = NegativeSet::kOtherPositives,
                    Mat* grad_z = nullptr, Mat* grad_z_pos = nullptr);

// A record mapped onto vocabulary indices. Output indices below
// vocab.target_size() are target symbols; target_size() + k is quantity Nk.
struct Example {
  std::vector<int> source;
  std::vector<int> position_quantity;
  int num_quantities = 0;
  std::vector<int> target;  // gold prefix tokens then <eos>; empty if no gold
  int unknown_tokens = 0;
};

// Throws ConfigError when the gold tree uses a constant outside the vocab.
Example make_example(const Vocab& vocab, const ProblemRecord& record);

struct LossConfig {
  bool contrastive = false;
  double lambda = 1.0;
  double temperature = 0.1;
  NegativeSet negatives = NegativeSet::kOtherPositives;
};

struct LossValue {
  double total = 0.0;
  double cross_entropy = 0.0;  // summed over steps, mean over the batch
  double contrastive = 0.0;
  // Hash of every max-pool selection; changes when the loss crosses a kink.
  std::uint64_t pool_signature = 0;
};

// Teacher-forced loss over a batch. With contrastive on, positives must have
// the same length as anchors; positives contribute only through z. When grad
// is non-null it is overwritten with d(total)/d(params).
LossValue batch_loss(const Model& model, std::span<const Example* const> anchors,
                     std::span<const Example* const> positives,
                     const LossConfig& config, ModelParams* grad = nullptr);

struct Decoded {
  LinearTree tokens;             // emitted symbols without <eos>
  std::optional<ExprTree> tree;  // set when decoding produced a valid tree
  std::string failure;           // reason when tree is empty
};

Decoded greedy_decode(const Model& model, const ProblemRecord& record,
                      int max_len);

// Decodes, evaluates and checks the answer. Never throws on model output.
bool solves(const Model& model, const ProblemRecord& record, int max_len,
            double threshold = kDefaultAnswerThreshold);

}  // namespace mwpx::solver

#endif  // MWPX_SOLVER_NET_H_

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

#include "mwpx/solver/model.h"

#include <algorithm>
#include <random>
#include <set>

#include "mwpx/error.h"

namespace mwpx::solver {

Vocab Vocab::build(const ConstantTable& constants,
                   std::span<const ProblemRecord> records,
                   int max_quantity_tokens) {
  std::vector<std::string> source;
  source.emplace_back(kUnk);
  for (int i = 0; i < max_quantity_tokens; ++i) {
    source.push_back(quantity_token(i));
  }
  std::set<std::string> words;
  for (const ProblemRecord& r : records) {
    for (const std::string& tok : r.tokens) {
      if (parse_quantity_token(tok)) continue;
      words.insert(tok);
    }
  }
  words.erase(std::string(kUnk));
  source.insert(source.end(), words.begin(), words.end());
  return from_parts(constants, std::move(source));
}

Vocab Vocab::from_parts(ConstantTable constants,
                        std::vector<std::string> source_tokens) {
  Vocab v;
  v.constants_ = std::move(constants);
  for (Operator op : kAllOperators) {
    v.target_.emplace_back(operator_symbol(op));
  }
  for (const auto& e : v.constants_.entries()) v.target_.push_back(e.id);
  v.target_.emplace_back(kBos);
  v.target_.emplace_back(kEos);
  v.source_ = std::move(source_tokens);
  if (v.source_.empty() || v.source_[0] != kUnk) {
    throw Error(Errc::kConfigError, "source vocabulary must start with <unk>");
  }
  v.index();
  return v;
}

void Vocab::index() {
  target_index_.clear();
  source_index_.clear();
  for (std::size_t i = 0; i < target_.size(); ++i) {
    target_index_.emplace(target_[i], static_cast<int>(i));
  }
  for (std::size_t i = 0; i < source_.size(); ++i) {
    if (!source_index_.emplace(source_[i], static_cast<int>(i)).second) {
      throw Error(Errc::kConfigError, "duplicate source token " + source_[i]);
    }
  }
}

std::optional<int> Vocab::target_index(std::string_view symbol) const {
  auto it = target_index_.find(std::string(symbol));
  if (it == target_index_.end()) return std::nullopt;
  return it->second;
}

int Vocab::source_index(std::string_view token) const {
  auto it = source_index_.find(std::string(token));
  return it == source_index_.end() ? unk() : it->second;
}

bool Vocab::operator==(const Vocab& other) const {
  return constants_ == other.constants_ && target_ == other.target_ &&
         source_ == other.source_;
}

namespace {

Mat uniform(int rows, int cols, double range, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-range, range);
  Mat m(rows, cols);
  // Fill row-major so the draw order does not depend on Eigen's storage.
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
  }
  return m;
}

LstmWeights lstm(int input, int hidden, double range, std::mt19937_64& rng) {
  LstmWeights w;
  w.w = uniform(4 * hidden, input + hidden, range, rng);
  w.b = Mat::Zero(4 * hidden, 1);
  w.b.block(hidden, 0, hidden, 1).setOnes();
  return w;
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& config, int source_size,
                              int target_size, std::uint64_t seed) {
  if (config.hidden_dim <= 0 || config.hidden_dim % 2 != 0 ||
      config.embed_dim <= 0 || config.state_dim <= 0) {
    throw Error(Errc::kConfigError,
                "dimensions must be positive and hidden_dim even");
  }
  std::mt19937_64 rng(seed);
  const double r = config.init_range;
  const int de = config.embed_dim, dh = config.hidden_dim,
            ds = config.state_dim, half = dh / 2;
  ModelParams p;
  p.src_embed = uniform(source_size, de, r, rng);
  for (int layer = 0; layer < 2; ++layer) {
    const int in = layer == 0 ? de : dh;
    for (int dir = 0; dir < 2; ++dir) p.encoder[layer][dir] = lstm(in, half, r, rng);
  }
  p.tgt_embed = uniform(target_size + 1, de, r, rng);
  p.w_copy = uniform(dh, ds, r, rng);
  p.w_attn = uniform(dh, ds, r, rng);
  p.b_attn = Mat::Zero(1, 1);
  p.w_gen = uniform(ds, target_size, r, rng);
  p.b_gen = Mat::Zero(target_size, 1);
  p.w_fuse = uniform(ds, de + 2 * dh, r, rng);
  p.decoder = lstm(ds, ds, r, rng);
  return p;
}

ModelParams ModelParams::zeros_like(const ModelParams& other) {
  ModelParams p = other;
  p.set_zero();
  return p;
}

std::vector<NamedTensor> ModelParams::tensors() {
  std::vector<NamedTensor> out = {{"src_embed", &src_embed}};
  static const char* kDir[] = {"fw", "bw"};
  for (int layer = 0; layer < 2; ++layer) {
    for (int dir = 0; dir < 2; ++dir) {
      std::string base =
          "encoder.l" + std::to_string(layer) + "." + kDir[dir];
      out.push_back({base + ".w", &encoder[layer][dir].w});
      out.push_back({base + ".b", &encoder[layer][dir].b});
    }
  }
  out.push_back({"tgt_embed", &tgt_embed});
  out.push_back({"w_copy", &w_copy});
  out.push_back({"w_attn", &w_attn});
  out.push_back({"b_attn", &b_attn});
  out.push_back({"w_gen", &w_gen});
  out.push_back({"b_gen", &b_gen});
  out.push_back({"w_fuse", &w_fuse});
  out.push_back({"decoder.w", &decoder.w});
  out.push_back({"decoder.b", &decoder.b});
  return out;
}

std::vector<ConstNamedTensor> ModelParams::tensors() const {
  auto mut = const_cast<ModelParams*>(this)->tensors();
  std::vector<ConstNamedTensor> out;
  out.reserve(mut.size());
  for (auto& t : mut) out.push_back({std::move(t.name), t.tensor});
  return out;
}

std::size_t ModelParams::num_parameters() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += static_cast<std::size_t>(t.tensor->size());
  return n;
}

bool ModelParams::all_finite() const {
  for (const auto& t : tensors()) {
    if (!t.tensor->allFinite()) return false;
  }
  return true;
}

void ModelParams::set_zero() {
  for (auto& t : tensors()) t.tensor->setZero();
}

Model Model::create(const ModelConfig& config, Vocab vocab,
                    std::uint64_t seed) {
  Model m;
  m.config = config;
  m.params = ModelParams::init(config, vocab.source_size(),
                               vocab.target_size(), seed);
  m.vocab = std::move(vocab);
  return m;
}

}  // namespace mwpx::solver

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

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mwpx/error.h"
#include "mwpx/solver/model.h"

namespace mwpx::solver {
namespace {

constexpr char kMagic[8] = {'M', 'W', 'P', 'X', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    buf_.append(static_cast<const char*>(data), n);
  }
  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 4);
  }
  void f64(double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    bytes(b, 8);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string data) : buf_(std::move(data)) {}
  const char* take(std::size_t n) {
    if (n > buf_.size() - pos_) fail("truncated file");
    const char* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint32_t u32() {
    auto p = reinterpret_cast<const unsigned char*>(take(4));
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{p[i]} << (8 * i);
    return v;
  }
  double f64() {
    auto p = reinterpret_cast<const unsigned char*>(take(8));
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{p[i]} << (8 * i);
    return std::bit_cast<double>(v);
  }
  std::string str() {
    std::uint32_t n = u32();
    return std::string(take(n), n);
  }
  bool done() const { return pos_ == buf_.size(); }
  [[noreturn]] static void fail(const std::string& what) {
    throw Error(Errc::kCheckpointError, what);
  }

 private:
  std::string buf_;
  std::size_t pos_ = 0;
};

const char* squash_name(Squash s) {
  return s == Squash::kTanh ? "tanh" : "sigmoid";
}

nlohmann::json config_json(const ModelConfig& c) {
  return {{"embed_dim", c.embed_dim},
          {"hidden_dim", c.hidden_dim},
          {"state_dim", c.state_dim},
          {"squash", squash_name(c.squash)},
          {"max_quantity_tokens", c.max_quantity_tokens},
          {"init_range", c.init_range}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.embed_dim = j.at("embed_dim").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.state_dim = j.at("state_dim").get<int>();
  std::string squash = j.at("squash").get<std::string>();
  if (squash == "tanh") {
    c.squash = Squash::kTanh;
  } else if (squash == "sigmoid") {
    c.squash = Squash::kSigmoid;
  } else {
    Reader::fail("unknown squash " + squash);
  }
  c.max_quantity_tokens = j.at("max_quantity_tokens").get<int>();
  c.init_range = j.at("init_range").get<double>();
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.str(config_json(model.config).dump());
  const auto& constants = model.vocab.constants().entries();
  w.u32(static_cast<std::uint32_t>(constants.size()));
  for (const auto& e : constants) {
    w.str(e.id);
    w.f64(e.value);
  }
  const auto& source = model.vocab.source_tokens();
  w.u32(static_cast<std::uint32_t>(source.size()));
  for (const auto& tok : source) w.str(tok);
  auto tensors = model.params.tensors();
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    w.str(t.name);
    w.u32(static_cast<std::uint32_t>(t.tensor->rows()));
    w.u32(static_cast<std::uint32_t>(t.tensor->cols()));
    for (Eigen::Index r = 0; r < t.tensor->rows(); ++r) {
      for (Eigen::Index c = 0; c < t.tensor->cols(); ++c) w.f64((*t.tensor)(r, c));
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kCheckpointError, "cannot write " + path);
  out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
  if (!out) throw Error(Errc::kCheckpointError, "write failed: " + path);
}

Model load_checkpoint(const std::string& path, const Vocab* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kCheckpointError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  Reader r(ss.str());

  if (std::memcmp(r.take(sizeof kMagic), kMagic, sizeof kMagic) != 0) {
    Reader::fail(path + ": bad magic");
  }
  std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    Reader::fail(path + ": unsupported version " + std::to_string(version));
  }
  Model model;
  try {
    model.config = config_from_json(nlohmann::json::parse(r.str()));
  } catch (const nlohmann::json::exception& e) {
    Reader::fail(path + ": bad config: " + e.what());
  }
  ConstantTable constants;
  std::uint32_t n_const = r.u32();
  for (std::uint32_t i = 0; i < n_const; ++i) {
    std::string id = r.str();
    double value = r.f64();
    constants.add(std::move(id), value);
  }
  std::vector<std::string> source(r.u32());
  for (auto& tok : source) tok = r.str();
  try {
    model.vocab = Vocab::from_parts(std::move(constants), std::move(source));
  } catch (const Error& e) {
    Reader::fail(path + ": bad vocabulary: " + e.what());
  }
  if (expected != nullptr && !(model.vocab == *expected)) {
    Reader::fail(path + ": vocabulary does not match");
  }

  // Shapes come from a freshly initialized model; the file must agree.
  model.params = ModelParams::init(model.config, model.vocab.source_size(),
                                   model.vocab.target_size(), 0);
  auto tensors = model.params.tensors();
  if (r.u32() != tensors.size()) Reader::fail(path + ": tensor count mismatch");
  for (auto& t : tensors) {
    std::string name = r.str();
    std::uint32_t rows = r.u32(), cols = r.u32();
    if (name != t.name || rows != t.tensor->rows() || cols != t.tensor->cols()) {
      Reader::fail(path + ": unexpected tensor " + name);
    }
    for (std::uint32_t i = 0; i < rows; ++i) {
      for (std::uint32_t j = 0; j < cols; ++j) (*t.tensor)(i, j) = r.f64();
    }
  }
  if (!r.done()) Reader::fail(path + ": trailing bytes");
  if (!model.params.all_finite()) Reader::fail(path + ": non-finite weights");
  return model;
}

}  // namespace mwpx::solver

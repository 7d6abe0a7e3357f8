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

#include "mwpx/solver/net.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "mwpx/error.h"

namespace mwpx::solver {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Vec sigmoid(const Vec& x) {
  return (1.0 + (-x.array()).exp()).inverse().matrix();
}

Mat squash(Squash kind, const Mat& x) {
  if (kind == Squash::kTanh) return x.array().tanh().matrix();
  return (1.0 + (-x.array()).exp()).inverse().matrix();
}

// Derivative of the squash expressed through its output y.
Mat squash_grad(Squash kind, const Mat& y) {
  if (kind == Squash::kTanh) return (1.0 - y.array().square()).matrix();
  return (y.array() * (1.0 - y.array())).matrix();
}

// Scalar exp: Eigen's packet exp clamps -inf to a denormal, not 0.
Vec exp_shifted(const Vec& x, double shift) {
  return x.unaryExpr([shift](double v) { return std::exp(v - shift); });
}

// Softmax in place; returns log of the normalizer. Empty input is allowed.
double softmax_inplace(Vec& x) {
  if (x.size() == 0) return 0.0;
  double mx = x.maxCoeff();
  x = exp_shifted(x, mx);
  double sum = x.sum();
  x /= sum;
  return mx + std::log(sum);
}

// ---- LSTM cell ----

struct LstmTrace {
  Vec xh, i, f, g, o, c_prev, c, tanh_c, h;
};

void lstm_forward(const LstmWeights& w, const Vec& x, const Vec& h_prev,
                  const Vec& c_prev, LstmTrace& t) {
  const Eigen::Index H = h_prev.size();
  t.xh.resize(x.size() + H);
  t.xh << x, h_prev;
  Vec a = w.w * t.xh + w.b.col(0);
  t.i = sigmoid(a.segment(0, H));
  t.f = sigmoid(a.segment(H, H));
  t.g = a.segment(2 * H, H).array().tanh().matrix();
  t.o = sigmoid(a.segment(3 * H, H));
  t.c_prev = c_prev;
  t.c = (t.f.array() * c_prev.array() + t.i.array() * t.g.array()).matrix();
  t.tanh_c = t.c.array().tanh().matrix();
  t.h = (t.o.array() * t.tanh_c.array()).matrix();
}

// dh and dc are gradients flowing into h and c of this step.
void lstm_backward(const LstmWeights& w, const LstmTrace& t, const Vec& dh,
                   const Vec& dc_in, LstmWeights& grad, Vec& dx, Vec& dh_prev,
                   Vec& dc_prev) {
  const Eigen::Index H = dh.size();
  Vec dc = dc_in.array() +
           dh.array() * t.o.array() * (1.0 - t.tanh_c.array().square());
  Vec da(4 * H);
  da.segment(0, H) =
      (dc.array() * t.g.array() * t.i.array() * (1.0 - t.i.array())).matrix();
  da.segment(H, H) = (dc.array() * t.c_prev.array() * t.f.array() *
                      (1.0 - t.f.array()))
                         .matrix();
  da.segment(2 * H, H) =
      (dc.array() * t.i.array() * (1.0 - t.g.array().square())).matrix();
  da.segment(3 * H, H) = (dh.array() * t.tanh_c.array() * t.o.array() *
                          (1.0 - t.o.array()))
                             .matrix();
  grad.w.noalias() += da * t.xh.transpose();
  grad.b.col(0) += da;
  Vec dxh = w.w.transpose() * da;
  const Eigen::Index in = dxh.size() - H;
  dx = dxh.head(in);
  dh_prev = dxh.tail(H);
  dc_prev = (dc.array() * t.f.array()).matrix();
}

// ---- encoder ----

struct EncoderTrace {
  std::vector<int> ids;
  std::vector<PieceRange> groups;
  Mat input;      // words x d_e
  Mat layer_out[2];  // words x d_h
  std::vector<LstmTrace> steps[2][2];
  Vec pooled;
  std::vector<Eigen::Index> argmax;
  double norm = 0.0;
  Vec z;
  int unknown_tokens = 0;
};

void run_encoder(const Model& model, std::span<const int> token_ids,
                 std::span<const PieceRange> grouping, EncoderTrace& tr) {
  if (token_ids.empty()) {
    throw Error(Errc::kConfigError, "cannot encode an empty sequence");
  }
  const ModelParams& p = model.params;
  const int half = model.config.hidden_dim / 2;
  const int de = model.config.embed_dim;
  tr.ids.assign(token_ids.begin(), token_ids.end());
  tr.unknown_tokens = 0;
  for (int& id : tr.ids) {
    if (id < 0 || id >= p.src_embed.rows()) {
      id = model.vocab.unk();
      ++tr.unknown_tokens;
    } else if (id == model.vocab.unk()) {
      ++tr.unknown_tokens;
    }
  }
  const int pieces = static_cast<int>(tr.ids.size());
  Mat piece_vecs(pieces, de);
  for (int i = 0; i < pieces; ++i) piece_vecs.row(i) = p.src_embed.row(tr.ids[i]);
  if (grouping.empty()) {
    tr.groups.clear();
    for (int i = 0; i < pieces; ++i) tr.groups.push_back({i, i + 1});
    tr.input = std::move(piece_vecs);
  } else {
    tr.groups.assign(grouping.begin(), grouping.end());
    tr.input = pool_pieces(piece_vecs, grouping);
  }

  const Eigen::Index n = tr.input.rows();
  const Mat* in = &tr.input;
  for (int layer = 0; layer < 2; ++layer) {
    Mat& out = tr.layer_out[layer];
    out.resize(n, 2 * half);
    for (int dir = 0; dir < 2; ++dir) {
      auto& steps = tr.steps[layer][dir];
      steps.assign(n, {});
      Vec h = Vec::Zero(half), c = Vec::Zero(half);
      for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index t = dir == 0 ? k : n - 1 - k;
        lstm_forward(p.encoder[layer][dir], in->row(t).transpose(), h, c,
                     steps[t]);
        h = steps[t].h;
        c = steps[t].c;
        out.row(t).segment(dir * half, half) = h.transpose();
      }
    }
    in = &out;
  }

  const Mat& m = tr.layer_out[1];
  tr.pooled.resize(m.cols());
  tr.argmax.resize(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    Eigen::Index best = 0;
    tr.pooled(j) = m.col(j).maxCoeff(&best);
    tr.argmax[j] = best;
  }
  tr.norm = std::max(tr.pooled.norm(), 1e-12);
  tr.z = tr.pooled / tr.norm;
}

void encoder_backward(const Model& model, const EncoderTrace& tr, Mat d_memory,
                      const Vec* d_z, ModelParams& grad) {
  const ModelParams& p = model.params;
  const int half = model.config.hidden_dim / 2;
  const Eigen::Index n = tr.input.rows();
  if (d_z != nullptr) {
    Vec dp = (*d_z - tr.z * tr.z.dot(*d_z)) / tr.norm;
    for (Eigen::Index j = 0; j < dp.size(); ++j) d_memory(tr.argmax[j], j) += dp(j);
  }
  Mat d_out = std::move(d_memory);
  for (int layer = 1; layer >= 0; --layer) {
    const Eigen::Index in_dim = layer == 0 ? tr.input.cols() : 2 * half;
    Mat d_in = Mat::Zero(n, in_dim);
    for (int dir = 0; dir < 2; ++dir) {
      const auto& steps = tr.steps[layer][dir];
      Vec dh_next = Vec::Zero(half), dc_next = Vec::Zero(half);
      Vec dx, dh_prev, dc_prev;
      for (Eigen::Index k = n - 1; k >= 0; --k) {
        const Eigen::Index t = dir == 0 ? k : n - 1 - k;
        Vec dh = d_out.row(t).segment(dir * half, half).transpose() + dh_next;
        lstm_backward(p.encoder[layer][dir], steps[t], dh, dc_next,
                      grad.encoder[layer][dir], dx, dh_prev, dc_prev);
        d_in.row(t) += dx.transpose();
        dh_next = dh_prev;
        dc_next = dc_prev;
      }
    }
    d_out = std::move(d_in);
  }
  for (std::size_t w = 0; w < tr.groups.size(); ++w) {
    const PieceRange& g = tr.groups[w];
    const double scale = 1.0 / (g.end - g.begin);
    for (int i = g.begin; i < g.end; ++i) {
      grad.src_embed.row(tr.ids[i]) += scale * d_out.row(static_cast<Eigen::Index>(w));
    }
  }
}

// ---- decoder ----

struct StepTrace {
  Vec h_in, c_in;
  Vec q;  // over quantity positions
  Vec b_read;
  Vec d;  // over all positions
  Vec c_read;
  int prev_row = 0;
  Vec fused_in;
  Vec x;
  LstmTrace cell;
  Vec gen;       // p
  Vec copy_q;    // u' over quantity positions
};

void step_forward(const Model& model, const DecoderContext& ctx,
                  const Vec& h, const Vec& c, int prev_row, StepTrace& t) {
  const ModelParams& p = model.params;
  const auto& qpos = ctx.quantity_positions;
  const Eigen::Index K = static_cast<Eigen::Index>(qpos.size());
  t.h_in = h;
  t.c_in = c;
  t.prev_row = prev_row;

  t.q.resize(K);
  for (Eigen::Index k = 0; k < K; ++k) t.q(k) = ctx.copy_keys.row(qpos[k]).dot(h);
  softmax_inplace(t.q);
  t.b_read = Vec::Zero(ctx.memory.cols());
  for (Eigen::Index k = 0; k < K; ++k) {
    t.b_read += t.q(k) * ctx.memory.row(qpos[k]).transpose();
  }

  t.d = ctx.attn_keys * h;
  t.d.array() += p.b_attn(0, 0);
  softmax_inplace(t.d);
  t.c_read = ctx.memory.transpose() * t.d;

  const Eigen::Index de = p.tgt_embed.cols();
  t.fused_in.resize(de + 2 * ctx.memory.cols());
  t.fused_in << p.tgt_embed.row(prev_row).transpose(), t.b_read, t.c_read;
  t.x = p.w_fuse * t.fused_in;
  lstm_forward(p.decoder, t.x, h, c, t.cell);

  t.gen = p.w_gen.transpose() * t.cell.h + p.b_gen.col(0);
  t.copy_q.resize(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    t.copy_q(k) = ctx.copy_keys.row(qpos[k]).dot(t.cell.h);
  }
}

int prev_row_for(const Vocab& vocab, int output_index) {
  return output_index < vocab.target_size() ? output_index : vocab.copy_symbol();
}

struct SourceView {
  std::vector<int> ids;
  std::vector<int> position_quantity;
  int num_quantities = 0;
};

SourceView source_view(const Vocab& vocab, const ProblemRecord& record) {
  SourceView v;
  v.num_quantities = record.num_quantities();
  for (const std::string& tok : record.tokens) {
    v.ids.push_back(vocab.source_index(tok));
    auto k = parse_quantity_token(tok);
    v.position_quantity.push_back(k ? *k : -1);
    if (k) v.num_quantities = std::max(v.num_quantities, *k + 1);
  }
  return v;
}

std::vector<bool> copy_mask_of(std::span<const int> position_quantity) {
  std::vector<bool> mask;
  for (int k : position_quantity) mask.push_back(k >= 0);
  return mask;
}

DecoderContext context_for(const Model& model, const Mat& memory,
                           std::span<const int> position_quantity) {
  std::vector<bool> mask = copy_mask_of(position_quantity);
  std::unique_ptr<bool[]> flags(new bool[mask.size()]);
  for (std::size_t i = 0; i < mask.size(); ++i) flags[i] = mask[i];
  return make_context(model, memory, std::span<const bool>(flags.get(), mask.size()));
}

}  // namespace

Mat pool_pieces(const Mat& pieces, std::span<const PieceRange> words) {
  Mat out(static_cast<Eigen::Index>(words.size()), pieces.cols());
  int expect = 0;
  for (std::size_t w = 0; w < words.size(); ++w) {
    const PieceRange& r = words[w];
    if (r.end <= r.begin) {
      throw Error(Errc::kEmptyGroup, "word " + std::to_string(w) + " has no pieces");
    }
    if (r.begin != expect || r.end > pieces.rows()) {
      throw Error(Errc::kConfigError, "piece ranges do not partition the input");
    }
    out.row(static_cast<Eigen::Index>(w)) =
        pieces.middleRows(r.begin, r.end - r.begin).colwise().mean();
    expect = r.end;
  }
  if (expect != pieces.rows()) {
    throw Error(Errc::kConfigError, "piece ranges do not cover the input");
  }
  return out;
}

EncoderOutput encode(const Model& model, std::span<const int> token_ids,
                     std::span<const PieceRange> grouping) {
  EncoderTrace tr;
  run_encoder(model, token_ids, grouping, tr);
  return {std::move(tr.layer_out[1]), std::move(tr.z), tr.unknown_tokens};
}

DecoderState initial_state(const Model& model) {
  const int ds = model.config.state_dim;
  return {Vec::Zero(ds), Vec::Zero(ds), 0};
}

DecoderContext make_context(const Model& model, const Mat& memory,
                            std::span<const bool> copy_mask) {
  if (static_cast<Eigen::Index>(copy_mask.size()) != memory.rows()) {
    throw Error(Errc::kConfigError, "copy mask length differs from memory");
  }
  DecoderContext ctx;
  ctx.memory = memory;
  ctx.copy_keys = squash(model.config.squash, memory * model.params.w_copy);
  ctx.attn_keys = squash(model.config.squash, memory * model.params.w_attn);
  for (std::size_t i = 0; i < copy_mask.size(); ++i) {
    if (copy_mask[i]) ctx.quantity_positions.push_back(static_cast<int>(i));
  }
  return ctx;
}

StepOutput decode_step(const Model& model, const DecoderContext& context,
                       const DecoderState& state, int prev_symbol) {
  if (prev_symbol < 0 || prev_symbol > model.vocab.copy_symbol()) {
    throw Error(Errc::kConfigError, "previous symbol out of range");
  }
  StepTrace t;
  step_forward(model, context, state.h, state.c, prev_symbol, t);
  StepOutput out;
  out.gen_scores = std::move(t.gen);
  out.copy_scores = Vec::Constant(context.memory.rows(), kNegInf);
  for (std::size_t k = 0; k < context.quantity_positions.size(); ++k) {
    out.copy_scores(context.quantity_positions[k]) =
        t.copy_q(static_cast<Eigen::Index>(k));
  }
  out.next = {std::move(t.cell.h), std::move(t.cell.c), state.step + 1};
  return out;
}

Vec output_distribution(const Vec& gen_scores, const Vec& copy_scores,
                        std::span<const int> position_quantity,
                        int num_quantities, Vec* position_probs) {
  if (static_cast<Eigen::Index>(position_quantity.size()) != copy_scores.size()) {
    throw Error(Errc::kConfigError, "copy scores and positions differ in length");
  }
  const Eigen::Index V = gen_scores.size(), n = copy_scores.size();
  Vec logits(V + n);
  logits.head(V) = gen_scores;
  for (Eigen::Index i = 0; i < n; ++i) {
    logits(V + i) = position_quantity[i] >= 0 ? copy_scores(i) : kNegInf;
  }
  const double mx = logits.maxCoeff();
  if (!std::isfinite(mx)) {
    throw Error(Errc::kNonFiniteResult, "no finite score to normalize");
  }
  logits = exp_shifted(logits, mx);
  logits /= logits.sum();
  Vec out = Vec::Zero(V + num_quantities);
  out.head(V) = logits.head(V);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int k = position_quantity[i];
    if (k >= 0 && k < num_quantities) out(V + k) += logits(V + i);
  }
  if (position_probs != nullptr) *position_probs = logits.tail(n);
  return out;
}

double nt_xent_loss(const Mat& z, const Mat& z_pos, double temperature,
                    NegativeSet negatives, Mat* grad_z, Mat* grad_z_pos) {
  if (!(temperature > 0.0)) {
    throw Error(Errc::kBadTemperature, "temperature must be positive");
  }
  if (z.rows() != z_pos.rows() || z.cols() != z_pos.cols() || z.rows() == 0) {
    throw Error(Errc::kConfigError, "anchor and positive batches differ in shape");
  }
  for (const Mat* m : {&z, &z_pos}) {
    for (Eigen::Index i = 0; i < m->rows(); ++i) {
      if (std::abs(m->row(i).norm() - 1.0) > 1e-6) {
        throw Error(Errc::kNotNormalized, "row " + std::to_string(i) + " is not unit length");
      }
    }
  }
  const Eigen::Index N = z.rows();
  const bool others = negatives == NegativeSet::kAllOthers;
  Mat s = z * z_pos.transpose() / temperature;   // s(i, j) = <z_i, z+_j>/tau
  Mat a = others ? Mat(z * z.transpose() / temperature) : Mat();
  double loss = 0.0;
  Mat ds = Mat::Zero(N, N), da = Mat::Zero(N, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    Vec logits(others ? 2 * N - 1 : N);
    logits.head(N) = s.row(i).transpose();
    if (others) {
      Eigen::Index k = N;
      for (Eigen::Index j = 0; j < N; ++j) {
        if (j != i) logits(k++) = a(i, j);
      }
    }
    Vec prob = logits;
    const double lse = softmax_inplace(prob);
    loss += lse - s(i, i);
    prob /= static_cast<double>(N);
    ds.row(i) = prob.head(N).transpose();
    ds(i, i) -= 1.0 / static_cast<double>(N);
    if (others) {
      Eigen::Index k = N;
      for (Eigen::Index j = 0; j < N; ++j) {
        if (j != i) da(i, j) = prob(k++);
      }
    }
  }
  if (grad_z != nullptr) {
    *grad_z = ds * z_pos / temperature;
    if (others) *grad_z += (da + da.transpose()) * z / temperature;
  }
  if (grad_z_pos != nullptr) *grad_z_pos = ds.transpose() * z / temperature;
  return loss / static_cast<double>(N);
}

Example make_example(const Vocab& vocab, const ProblemRecord& record) {
  SourceView v = source_view(vocab, record);
  Example ex;
  ex.source = std::move(v.ids);
  ex.position_quantity = std::move(v.position_quantity);
  ex.num_quantities = v.num_quantities;
  for (int id : ex.source) ex.unknown_tokens += id == vocab.unk();
  if (!record.gold_tree) return ex;
  for (const std::string& tok : serialize_prefix(*record.gold_tree)) {
    if (auto k = parse_quantity_token(tok)) {
      if (std::find(ex.position_quantity.begin(), ex.position_quantity.end(), *k) ==
          ex.position_quantity.end()) {
        throw Error(Errc::kConfigError,
                    record.id + ": gold uses " + tok + " absent from the text");
      }
      ex.target.push_back(vocab.target_size() + *k);
    } else if (auto idx = vocab.target_index(tok)) {
      ex.target.push_back(*idx);
    } else {
      throw Error(Errc::kConfigError,
                  record.id + ": gold symbol " + tok + " not in vocabulary");
    }
  }
  ex.target.push_back(vocab.eos());
  return ex;
}

namespace {

struct ExampleTrace {
  EncoderTrace enc;
  DecoderContext ctx;
  std::vector<StepTrace> steps;
  std::vector<Vec> probs;  // softmax over [gen; copy at quantity positions]
};

// Returns summed cross-entropy of the teacher-forced target.
double decoder_forward(const Model& model, const Example& ex, ExampleTrace& tr) {
  const Vocab& vocab = model.vocab;
  const int V = vocab.target_size();
  tr.ctx = context_for(model, tr.enc.layer_out[1], ex.position_quantity);
  const auto& qpos = tr.ctx.quantity_positions;
  const Eigen::Index K = static_cast<Eigen::Index>(qpos.size());
  tr.steps.assign(ex.target.size(), {});
  tr.probs.assign(ex.target.size(), {});
  Vec h = Vec::Zero(model.config.state_dim), c = h;
  int prev = vocab.bos();
  double loss = 0.0;
  for (std::size_t t = 0; t < ex.target.size(); ++t) {
    StepTrace& st = tr.steps[t];
    step_forward(model, tr.ctx, h, c, prev, st);
    Vec logits(V + K);
    logits << st.gen, st.copy_q;
    softmax_inplace(logits);
    const int y = ex.target[t];
    double py = 0.0;
    if (y < V) {
      py = logits(y);
    } else {
      for (Eigen::Index k = 0; k < K; ++k) {
        if (ex.position_quantity[qpos[k]] == y - V) py += logits(V + k);
      }
    }
    loss -= std::log(std::max(py, std::numeric_limits<double>::min()));
    tr.probs[t] = std::move(logits);
    h = st.cell.h;
    c = st.cell.c;
    prev = prev_row_for(vocab, y);
  }
  return loss;
}

void decoder_backward(const Model& model, const Example& ex,
                      const ExampleTrace& tr, double scale, Mat& d_memory,
                      ModelParams& grad) {
  const ModelParams& p = model.params;
  const int V = model.vocab.target_size();
  const auto& ctx = tr.ctx;
  const auto& qpos = ctx.quantity_positions;
  const Eigen::Index K = static_cast<Eigen::Index>(qpos.size());
  const Eigen::Index de = p.tgt_embed.cols(), mem_dim = ctx.memory.cols();
  Mat d_copy_keys = Mat::Zero(ctx.copy_keys.rows(), ctx.copy_keys.cols());
  Mat d_attn_keys = Mat::Zero(ctx.attn_keys.rows(), ctx.attn_keys.cols());
  const int ds = model.config.state_dim;
  Vec dh_next = Vec::Zero(ds), dc_next = Vec::Zero(ds);
  Vec dx, dh_prev, dc_prev;
  for (std::size_t t = ex.target.size(); t-- > 0;) {
    const StepTrace& st = tr.steps[t];
    const int y = ex.target[t];
    Vec dlogits = tr.probs[t];
    if (y < V) {
      dlogits(y) -= 1.0;
    } else {
      double py = 0.0;
      for (Eigen::Index k = 0; k < K; ++k) {
        if (ex.position_quantity[qpos[k]] == y - V) py += tr.probs[t](V + k);
      }
      for (Eigen::Index k = 0; k < K; ++k) {
        if (ex.position_quantity[qpos[k]] == y - V) {
          dlogits(V + k) -= tr.probs[t](V + k) / py;
        }
      }
    }
    dlogits *= scale;
    const Vec dgen = dlogits.head(V);
    const Vec dcopy = dlogits.tail(K);
    const Vec& s_out = st.cell.h;

    grad.w_gen.noalias() += s_out * dgen.transpose();
    grad.b_gen.col(0) += dgen;
    Vec dh = p.w_gen * dgen + dh_next;
    for (Eigen::Index k = 0; k < K; ++k) {
      dh += dcopy(k) * ctx.copy_keys.row(qpos[k]).transpose();
      d_copy_keys.row(qpos[k]) += dcopy(k) * s_out.transpose();
    }
    lstm_backward(p.decoder, st.cell, dh, dc_next, grad.decoder, dx, dh_prev,
                  dc_prev);
    grad.w_fuse.noalias() += dx * st.fused_in.transpose();
    Vec dfused = p.w_fuse.transpose() * dx;
    grad.tgt_embed.row(st.prev_row) += dfused.head(de).transpose();
    const Vec db_read = dfused.segment(de, mem_dim);
    const Vec dc_read = dfused.tail(mem_dim);

    // Attentive read.
    d_memory.noalias() += st.d * dc_read.transpose();
    Vec dd = ctx.memory * dc_read;
    Vec dv = (st.d.array() * (dd.array() - st.d.dot(dd))).matrix();
    d_attn_keys.noalias() += dv * st.h_in.transpose();
    dh_prev.noalias() += ctx.attn_keys.transpose() * dv;
    grad.b_attn(0, 0) += dv.sum();

    // Selective read.
    if (K > 0) {
      Vec dq(K);
      for (Eigen::Index k = 0; k < K; ++k) {
        d_memory.row(qpos[k]) += st.q(k) * db_read.transpose();
        dq(k) = ctx.memory.row(qpos[k]).dot(db_read);
      }
      Vec du = (st.q.array() * (dq.array() - st.q.dot(dq))).matrix();
      for (Eigen::Index k = 0; k < K; ++k) {
        d_copy_keys.row(qpos[k]) += du(k) * st.h_in.transpose();
        dh_prev += du(k) * ctx.copy_keys.row(qpos[k]).transpose();
      }
    }
    dh_next = dh_prev;
    dc_next = dc_prev;
  }
  const Squash sq = model.config.squash;
  Mat d_copy_pre = (d_copy_keys.array() * squash_grad(sq, ctx.copy_keys).array()).matrix();
  Mat d_attn_pre = (d_attn_keys.array() * squash_grad(sq, ctx.attn_keys).array()).matrix();
  grad.w_copy.noalias() += ctx.memory.transpose() * d_copy_pre;
  grad.w_attn.noalias() += ctx.memory.transpose() * d_attn_pre;
  d_memory.noalias() += d_copy_pre * p.w_copy.transpose();
  d_memory.noalias() += d_attn_pre * p.w_attn.transpose();
}

std::uint64_t mix_signature(std::uint64_t h, const EncoderTrace& tr) {
  for (Eigen::Index a : tr.argmax) {
    h ^= static_cast<std::uint64_t>(a) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

}  // namespace

LossValue batch_loss(const Model& model, std::span<const Example* const> anchors,
                     std::span<const Example* const> positives,
                     const LossConfig& config, ModelParams* grad) {
  if (anchors.empty()) throw Error(Errc::kConfigError, "empty batch");
  if (config.contrastive && positives.size() != anchors.size()) {
    throw Error(Errc::kConfigError, "positives must pair one-to-one with anchors");
  }
  const std::size_t B = anchors.size();
  const double scale = 1.0 / static_cast<double>(B);
  std::vector<ExampleTrace> traces(B);
  LossValue value;
  for (std::size_t b = 0; b < B; ++b) {
    if (anchors[b]->target.empty()) {
      throw Error(Errc::kMissingGoldTree, "training example without a gold tree");
    }
    run_encoder(model, anchors[b]->source, {}, traces[b].enc);
    value.cross_entropy += decoder_forward(model, *anchors[b], traces[b]);
    value.pool_signature = mix_signature(value.pool_signature, traces[b].enc);
  }
  value.cross_entropy *= scale;

  std::vector<EncoderTrace> pos_traces;
  Mat dz, dz_pos;
  if (config.contrastive) {
    pos_traces.resize(B);
    const Eigen::Index dh = model.config.hidden_dim;
    Mat z(B, dh), zp(B, dh);
    for (std::size_t b = 0; b < B; ++b) {
      run_encoder(model, positives[b]->source, {}, pos_traces[b]);
      value.pool_signature = mix_signature(value.pool_signature, pos_traces[b]);
      z.row(static_cast<Eigen::Index>(b)) = traces[b].enc.z.transpose();
      zp.row(static_cast<Eigen::Index>(b)) = pos_traces[b].z.transpose();
    }
    value.contrastive = nt_xent_loss(z, zp, config.temperature, config.negatives,
                                     grad ? &dz : nullptr, grad ? &dz_pos : nullptr);
    if (grad) {
      dz *= config.lambda;
      dz_pos *= config.lambda;
    }
  }
  value.total = value.cross_entropy + config.lambda * value.contrastive;
  if (grad == nullptr) return value;

  if (grad->w_gen.size() == 0) *grad = ModelParams::zeros_like(model.params);
  else grad->set_zero();
  for (std::size_t b = 0; b < B; ++b) {
    const ExampleTrace& tr = traces[b];
    Mat d_memory = Mat::Zero(tr.enc.layer_out[1].rows(), tr.enc.layer_out[1].cols());
    decoder_backward(model, *anchors[b], tr, scale, d_memory, *grad);
    Vec dzb;
    if (config.contrastive) dzb = dz.row(static_cast<Eigen::Index>(b)).transpose();
    encoder_backward(model, tr.enc, std::move(d_memory),
                     config.contrastive ? &dzb : nullptr, *grad);
  }
  if (config.contrastive) {
    for (std::size_t b = 0; b < B; ++b) {
      const EncoderTrace& tr = pos_traces[b];
      Vec dzb = dz_pos.row(static_cast<Eigen::Index>(b)).transpose();
      encoder_backward(model, tr, Mat::Zero(tr.layer_out[1].rows(), tr.layer_out[1].cols()),
                       &dzb, *grad);
    }
  }
  return value;
}

Decoded greedy_decode(const Model& model, const ProblemRecord& record,
                      int max_len) {
  Decoded out;
  if (record.tokens.empty()) {
    out.failure = "empty problem text";
    return out;
  }
  const Vocab& vocab = model.vocab;
  const int V = vocab.target_size();
  SourceView src = source_view(vocab, record);
  EncoderOutput enc = encode(model, src.ids);
  DecoderContext ctx = context_for(model, enc.memory, src.position_quantity);
  DecoderState state = initial_state(model);
  int prev = vocab.bos();
  bool ended = false;
  for (int step = 0; step < max_len; ++step) {
    StepOutput so = decode_step(model, ctx, state, prev);
    Vec dist = output_distribution(so.gen_scores, so.copy_scores,
                                   src.position_quantity, src.num_quantities);
    Eigen::Index best = 0;
    dist.maxCoeff(&best);
    const int y = static_cast<int>(best);
    if (y == vocab.eos()) {
      ended = true;
      break;
    }
    if (y == vocab.bos()) {
      out.failure = "emitted <bos>";
      return out;
    }
    out.tokens.push_back(y < V ? vocab.target_symbols()[y] : quantity_token(y - V));
    prev = prev_row_for(vocab, y);
    state = std::move(so.next);
  }
  if (!ended) {
    out.failure = "no <eos> within " + std::to_string(max_len) + " steps";
    return out;
  }
  try {
    out.tree = parse_prefix(out.tokens, record.num_quantities(), vocab.constants());
  } catch (const Error& e) {
    out.failure = e.what();
  }
  return out;
}

bool solves(const Model& model, const ProblemRecord& record, int max_len,
            double threshold) {
  Decoded d = greedy_decode(model, record, max_len);
  if (!d.tree) return false;
  try {
    std::vector<double> values = record.quantity_values();
    double v = evaluate(*d.tree, values, model.vocab.constants());
    return check_answer(v, record.gold_answer, threshold);
  } catch (const Error&) {
    return false;
  }
}

}  // namespace mwpx::solver

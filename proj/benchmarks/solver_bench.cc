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

#include <benchmark/benchmark.h>

#include <vector>

#include "mwpx/corpus.h"
#include "mwpx/solver/net.h"
#include "mwpx/solver/train.h"

namespace mwpx::solver {
namespace {

struct Fixture {
  std::vector<ProblemRecord> records;
  Model model;
  std::vector<Example> examples;
};

// Desk-sized model over a small synthetic corpus; hidden size from the arg.
Fixture make_fixture(int hidden) {
  Fixture f;
  const ConstantTable table = ConstantTable::standard();
  f.records = generate_synthetic_bilingual(desk_synth_config(32, 0, 0, 5), table);
  ModelConfig mc;
  mc.hidden_dim = hidden;
  mc.state_dim = hidden;
  f.model = make_model(mc, table, f.records, 5);
  for (const ProblemRecord& r : f.records) f.examples.push_back(make_example(f.model.vocab, r));
  return f;
}

void BM_Encode(benchmark::State& state) {
  Fixture f = make_fixture(static_cast<int>(state.range(0)));
  std::size_t i = 0;
  for (auto _ : state) {
    const Example& e = f.examples[i++ % f.examples.size()];
    benchmark::DoNotOptimize(encode(f.model, e.source));
  }
}
BENCHMARK(BM_Encode)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_GreedyDecode(benchmark::State& state) {
  Fixture f = make_fixture(static_cast<int>(state.range(0)));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(greedy_decode(f.model, f.records[i++ % f.records.size()], 16));
  }
}
BENCHMARK(BM_GreedyDecode)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_BatchLoss(benchmark::State& state) {
  Fixture f = make_fixture(128);
  const bool contrastive = state.range(1) != 0;
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<const Example*> anchors, positives;
  for (std::size_t i = 0; i < n; ++i) {
    anchors.push_back(&f.examples[i % f.examples.size()]);
    positives.push_back(&f.examples[(i + 1) % f.examples.size()]);
  }
  LossConfig lc;
  lc.contrastive = contrastive;
  ModelParams grad = f.model.params;
  for (auto _ : state) {
    benchmark::DoNotOptimize(batch_loss(f.model, anchors, positives, lc, &grad));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_BatchLoss)
    ->Args({8, 0})
    ->Args({32, 0})
    ->Args({32, 1})
    ->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace mwpx::solver

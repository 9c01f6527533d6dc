// Copyright 2026 The primsketch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "primsketch/model.h"
#include "primsketch/ops.h"
#include "primsketch/primitives.h"
#include "primsketch/tokenizer.h"

namespace primsketch {
namespace {

const Vocabulary& Vocab() {
  static const Vocabulary v(PrimitiveDictionary::kDefaultOrientations);
  return v;
}

std::vector<int> RandomBody(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> ids{Vocab().bos()};
  while (ids.size() < n) ids.push_back(static_cast<int>(rng() % PrimitiveDictionary::kDefaultOrientations));
  return ids;
}

// Desk configuration, inference over a full sequence.
void BM_DeskForward(benchmark::State& state) {
  const TransformerModel<float> model(ModelConfig::Desk(Vocab().size()), 1);
  const auto ids = RandomBody(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(model.ForwardLm(TokenSequence{ids, ids.size()}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DeskForward)->Arg(64)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

// One optimizer-free training step: batched forward, loss, backward.
void BM_DeskTrainStep(benchmark::State& state) {
  TransformerModel<float> model(ModelConfig::Desk(Vocab().size()), 1);
  std::vector<std::vector<int>> seqs;
  for (int b = 0; b < state.range(0); ++b) seqs.push_back(RandomBody(128, 10 + b));
  const TokenBatch batch = TokenBatch::FromSequences(seqs, Vocab().pad());
  std::mt19937_64 rng(3);
  for (auto _ : state) {
    Tape<float> tape;
    ForwardOptions opts;
    opts.training = true;
    opts.rng = &rng;
    const auto logits = model.ForwardLm(&tape, batch, opts);
    benchmark::DoNotOptimize(logits);
    Backward(Sum(&tape, logits), tape);
    for (auto& [name, p] : model.params().Named()) p.ZeroGrad();
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 128);
}
BENCHMARK(BM_DeskTrainStep)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

// Sampling cost per token: cached decoding versus recomputing the prefix.
void BM_DecodeCached(benchmark::State& state) {
  const TransformerModel<float> model(ModelConfig::Desk(Vocab().size()), 1);
  const auto ids = RandomBody(static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) {
    IncrementalDecoder<float> decoder(model);
    for (int id : ids) benchmark::DoNotOptimize(decoder.Push(id));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DecodeCached)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_DecodeRecompute(benchmark::State& state) {
  const TransformerModel<float> model(ModelConfig::Desk(Vocab().size()), 1);
  const auto ids = RandomBody(static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) {
    for (std::size_t n = 1; n <= ids.size(); ++n) {
      const std::vector<int> prefix(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n));
      benchmark::DoNotOptimize(model.ForwardLm(TokenSequence{prefix, n}));
    }
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DecodeRecompute)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace primsketch

BENCHMARK_MAIN();

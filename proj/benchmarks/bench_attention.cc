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

#include <vector>

#include "bench_util.h"
#include "primsketch/ops.h"

namespace primsketch {
namespace {

constexpr std::int64_t kHidden = 128;
constexpr std::int64_t kHeads = 4;

void BM_AttentionForward(benchmark::State& state) {
  const std::int64_t t = state.range(0);
  const auto q = bench::RandomTensor<float>({t, kHidden}, 1);
  const auto k = bench::RandomTensor<float>({t, kHidden}, 2);
  const auto v = bench::RandomTensor<float>({t, kHidden}, 3);
  const std::vector<std::uint8_t> valid(static_cast<std::size_t>(t), 1);
  AttentionLayout layout{.batch = 1, .seq_len = t, .heads = kHeads, .key_valid = valid};
  for (auto _ : state) {
    benchmark::DoNotOptimize(CausalSelfAttention<float>(nullptr, q, k, v, layout));
  }
  state.SetComplexityN(t);
}
BENCHMARK(BM_AttentionForward)->RangeMultiplier(2)->Range(32, 512)->Complexity(benchmark::oNSquared);

void BM_AttentionForwardBackward(benchmark::State& state) {
  const std::int64_t t = state.range(0);
  auto q = bench::RandomTensor<float>({t, kHidden}, 1, true);
  auto k = bench::RandomTensor<float>({t, kHidden}, 2, true);
  auto v = bench::RandomTensor<float>({t, kHidden}, 3, true);
  const std::vector<std::uint8_t> valid(static_cast<std::size_t>(t), 1);
  AttentionLayout layout{.batch = 1, .seq_len = t, .heads = kHeads, .key_valid = valid};
  for (auto _ : state) {
    Tape<float> tape;
    Backward(Sum(&tape, CausalSelfAttention(&tape, q, k, v, layout)), tape);
    q.ZeroGrad();
    k.ZeroGrad();
    v.ZeroGrad();
  }
  state.SetComplexityN(t);
}
BENCHMARK(BM_AttentionForwardBackward)->RangeMultiplier(2)->Range(32, 512)->Complexity(benchmark::oNSquared);

}  // namespace
}  // namespace primsketch

BENCHMARK_MAIN();

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

#include "bench_util.h"
#include "primsketch/ops.h"

namespace primsketch {
namespace {

void BM_MatMulForward(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  const auto a = bench::RandomTensor<float>({n, n}, 1);
  const auto b = bench::RandomTensor<float>({n, n}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(MatMul<float>(nullptr, a, b));
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_MatMulForward)->RangeMultiplier(2)->Range(32, 256);

void BM_MatMulForwardBackward(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  auto a = bench::RandomTensor<float>({n, n}, 1, true);
  auto b = bench::RandomTensor<float>({n, n}, 2, true);
  for (auto _ : state) {
    Tape<float> tape;
    Backward(Sum(&tape, MatMul(&tape, a, b)), tape);
    a.ZeroGrad();
    b.ZeroGrad();
  }
  state.SetItemsProcessed(state.iterations() * 6 * n * n * n);
}
BENCHMARK(BM_MatMulForwardBackward)->RangeMultiplier(2)->Range(32, 256);

// Row-major activations against a [out x in] weight, as in the attention
// projections.
void BM_MatMulTransposed(benchmark::State& state) {
  const std::int64_t rows = state.range(0);
  const auto x = bench::RandomTensor<float>({rows, 128}, 3);
  const auto w = bench::RandomTensor<float>({512, 128}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(MatMulTransposed<float>(nullptr, x, w));
  state.SetItemsProcessed(state.iterations() * 2 * rows * 128 * 512);
}
BENCHMARK(BM_MatMulTransposed)->Arg(64)->Arg(512);

}  // namespace
}  // namespace primsketch

BENCHMARK_MAIN();

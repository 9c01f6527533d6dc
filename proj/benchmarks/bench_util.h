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

#ifndef PRIMSKETCH_BENCHMARKS_BENCH_UTIL_H_
#define PRIMSKETCH_BENCHMARKS_BENCH_UTIL_H_

#include <cstdint>
#include <random>
#include <vector>

#include "primsketch/tensor.h"

namespace primsketch::bench {

template <typename T>
Tensor<T> RandomTensor(Shape shape, std::uint64_t seed, bool requires_grad = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<T> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = static_cast<T>(g(rng));
  return Tensor<T>::FromValues(std::move(shape), std::move(v), requires_grad);
}

}  // namespace primsketch::bench

#endif  // PRIMSKETCH_BENCHMARKS_BENCH_UTIL_H_

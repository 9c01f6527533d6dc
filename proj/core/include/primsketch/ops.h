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

#ifndef PRIMSKETCH_OPS_H_
#define PRIMSKETCH_OPS_H_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "primsketch/tensor.h"

namespace primsketch {

// Differentiable operations. Each takes a nullable tape: with a tape and at
// least one input requiring grad, the op records its backward function and
// the output requires grad; otherwise it is a plain forward evaluation.
//
// Matrices are rank-2 row-major; vectors are rank-1.

// [m x k] * [k x n]
template <typename T>
Tensor<T> MatMul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);

// [m x k] * [n x k]^T
template <typename T>
Tensor<T> MatMulTransposed(Tape<T>* tape, const Tensor<T>& a,
                           const Tensor<T>& b);

// x [n x in] * w [in x out] + bias [out]; bias may be undefined.
template <typename T>
Tensor<T> Linear(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& w,
                 const Tensor<T>& bias);

template <typename T>
Tensor<T> Add(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> Mul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> Scale(Tape<T>* tape, const Tensor<T>& x, T factor);

// Sum of all elements, as a scalar.
template <typename T>
Tensor<T> Sum(Tape<T>* tape, const Tensor<T>& x);

// Along the last axis, max-shifted.
template <typename T>
Tensor<T> Softmax(Tape<T>* tape, const Tensor<T>& x);

// Per row of x [n x d]: (x - mean) / sqrt(var + eps) * gain + bias.
template <typename T>
Tensor<T> LayerNorm(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& gain,
                    const Tensor<T>& bias, T eps);

// tanh approximation used by GPT-2.
template <typename T>
Tensor<T> Gelu(Tape<T>* tape, const Tensor<T>& x);

// Rows of table [V x H] selected by ids -> [n x H]. Backward scatters into
// the selected rows.
template <typename T>
Tensor<T> Embedding(Tape<T>* tape, const Tensor<T>& table,
                    std::span<const int> ids);

// Rows of x [n x d] -> [r x d].
template <typename T>
Tensor<T> GatherRows(Tape<T>* tape, const Tensor<T>& x,
                     std::span<const std::int64_t> rows);

// Mean negative log-likelihood of `targets` under softmax(logits) over rows
// whose target differs from ignore_id. Throws if no row contributes.
template <typename T>
Tensor<T> CrossEntropy(Tape<T>* tape, const Tensor<T>& logits,
                       std::span<const int> targets, int ignore_id);

// Inverted dropout with keep probability 1 - p. Identity when p == 0.
template <typename T>
Tensor<T> Dropout(Tape<T>* tape, const Tensor<T>& x, double p,
                  std::mt19937_64& rng);

struct AttentionLayout {
  std::int64_t batch = 1;
  std::int64_t seq_len = 1;
  std::int64_t heads = 1;
  // batch * seq_len flags; key j of sequence b is attendable iff non-zero.
  std::span<const std::uint8_t> key_valid;
  double dropout = 0.0;
  std::mt19937_64* rng = nullptr;  // required when dropout > 0
};

// Multi-head scaled dot-product attention with causal masking. q, k and v are
// [batch*seq_len x hidden]; head h owns columns [h*d, (h+1)*d). Query i of a
// sequence attends to keys j <= i with key_valid set, via an additive -inf
// mask before the softmax. Returns the concatenated heads (the output
// projection is applied by the caller). If `probs_out` is non-null it
// receives the attention weights laid out [batch][head][i][j].
template <typename T>
Tensor<T> CausalSelfAttention(Tape<T>* tape, const Tensor<T>& q,
                              const Tensor<T>& k, const Tensor<T>& v,
                              const AttentionLayout& layout,
                              std::vector<T>* probs_out = nullptr);

}  // namespace primsketch

#endif  // PRIMSKETCH_OPS_H_

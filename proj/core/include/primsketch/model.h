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

#ifndef PRIMSKETCH_MODEL_H_
#define PRIMSKETCH_MODEL_H_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "primsketch/tensor.h"
#include "primsketch/tokenizer.h"

namespace primsketch {

struct ModelConfig {
  int layers = 4;
  int heads = 4;
  int hidden = 128;
  int max_seq_len = 512;
  int vocab_size = PrimitiveDictionary::kDefaultOrientations + 4;
  int num_classes = 0;  // 0: no classification head
  int mlp_multiplier = 4;
  bool tie_lm_head = true;
  double dropout = 0.1;
  double layer_norm_eps = 1e-5;

  // Throws kInvalidArgument naming the offending field.
  void Validate() const;
  int head_dim() const { return hidden / heads; }

  // Desk-scale default (L=4, A=4, H=128).
  static ModelConfig Desk(int vocab_size);
  // Largest configuration of the network-size ablation (L=8, A=8, H=512).
  static ModelConfig Large(int vocab_size);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Exact learnable-scalar count for a configuration.
std::int64_t CountParameters(const ModelConfig& config);

template <typename T>
struct LayerParameters {
  Tensor<T> ln1_gain, ln1_bias;
  Tensor<T> w_q, b_q, w_k, b_k, w_v, b_v, w_o, b_o;
  Tensor<T> ln2_gain, ln2_bias;
  Tensor<T> w_fc, b_fc, w_proj, b_proj;
};

template <typename T>
struct ModelParameters {
  Tensor<T> token_embedding;     // [vocab x H]
  Tensor<T> position_embedding;  // [max_seq_len x H]
  std::vector<LayerParameters<T>> layers;
  Tensor<T> final_gain, final_bias;
  Tensor<T> lm_head;     // [H x vocab]; undefined when tied
  Tensor<T> cls_weight;  // [H x classes]; undefined without a head
  Tensor<T> cls_bias;

  // Stable order used by checkpoints and the optimizer.
  std::vector<std::pair<std::string, Tensor<T>>> Named() const;
  std::vector<Tensor<T>> All() const;
  std::vector<Tensor<T>> Backbone() const;  // everything except the class head
  std::int64_t ScalarCount() const;
};

// Allocates tensors with the shapes `config` implies. Weights ~ N(0, 0.02),
// biases and layer-norm offsets 0, layer-norm gains 1, class head 0.
template <typename T>
ModelParameters<T> InitializeParameters(const ModelConfig& config,
                                        std::uint64_t seed);

// Throws kShapeMismatch naming the first tensor that disagrees with `config`.
template <typename T>
void CheckParameterShapes(const ModelParameters<T>& params,
                          const ModelConfig& config);

template <typename To, typename From>
ModelParameters<To> ConvertParameters(const ModelParameters<From>& params);

template <typename T>
ModelParameters<T> CloneParameters(const ModelParameters<T>& params);

// Entry (i, j) is attendable iff j <= i and token j is not PAD.
class CausalMask {
 public:
  CausalMask(std::span<const int> ids, int pad_id);
  bool allowed(std::size_t i, std::size_t j) const {
    return j <= i && key_valid_[j] != 0;
  }
  std::size_t size() const { return key_valid_.size(); }
  std::span<const std::uint8_t> key_valid() const { return key_valid_; }

 private:
  std::vector<std::uint8_t> key_valid_;
};

// Right-padded rectangular batch of token ids.
struct TokenBatch {
  std::int64_t batch = 0;
  std::int64_t seq_len = 0;
  std::vector<int> ids;               // batch * seq_len
  std::vector<std::uint8_t> valid;    // non-PAD flags
  std::vector<std::int64_t> lengths;  // non-PAD count per row

  // Pads every sequence with `pad_id` to the longest one (or to `min_len`).
  static TokenBatch FromSequences(std::span<const std::vector<int>> sequences,
                                  int pad_id, std::int64_t min_len = 0);
};

struct ForwardOptions {
  bool training = false;            // enables dropout
  std::mt19937_64* rng = nullptr;   // required when training with dropout
  // Receives per-layer attention weights when non-null (inference only).
  std::vector<std::vector<double>>* attention_probs = nullptr;
};

// Decoder-only transformer with pre-norm blocks, learned absolute positions,
// tied (optionally untied) LM head and an optional classification head read
// at the EOS position.
template <typename T>
class TransformerModel {
 public:
  TransformerModel(ModelConfig config, std::uint64_t seed);
  TransformerModel(ModelConfig config, ModelParameters<T> params);

  const ModelConfig& config() const { return config_; }
  ModelParameters<T>& params() { return params_; }
  const ModelParameters<T>& params() const { return params_; }
  int pad_id() const { return config_.vocab_size - 1; }
  int eos_id() const { return config_.vocab_size - 2; }

  // Final-norm hidden states [batch*seq_len x H].
  Tensor<T> Hidden(Tape<T>* tape, const TokenBatch& batch,
                   const ForwardOptions& options = {}) const;
  // [batch*seq_len x vocab]
  Tensor<T> ForwardLm(Tape<T>* tape, const TokenBatch& batch,
                      const ForwardOptions& options = {}) const;
  // [batch x num_classes], read at each row's first EOS.
  Tensor<T> ForwardClassify(Tape<T>* tape, const TokenBatch& batch,
                            const ForwardOptions& options = {}) const;

  // Single-sequence conveniences for inference: [T x vocab] and [classes].
  Tensor<T> ForwardLm(const TokenSequence& tokens) const;
  Tensor<T> ForwardClassify(const TokenSequence& tokens) const;

  // Replaces the classification head with a zero head of `num_classes`.
  void ResetClassifierHead(int num_classes);

 private:
  void CheckBatch(const TokenBatch& batch) const;
  std::vector<std::int64_t> EosRows(const TokenBatch& batch) const;

  ModelConfig config_;
  ModelParameters<T> params_;
};

// Key/value-cached inference for one sequence: Push(token) returns the
// next-token logits after appending `token`, matching the last row of
// ForwardLm on the whole prefix up to rounding. Holds a reference to the
// model, which must outlive the decoder.
template <typename T>
class IncrementalDecoder {
 public:
  explicit IncrementalDecoder(const TransformerModel<T>& model);

  std::vector<T> Push(int token);
  std::size_t length() const { return length_; }

 private:
  const TransformerModel<T>& model_;
  std::size_t length_ = 0;
  // Per layer, row-major [length x hidden].
  std::vector<std::vector<T>> keys_;
  std::vector<std::vector<T>> values_;
};

}  // namespace primsketch

#endif  // PRIMSKETCH_MODEL_H_

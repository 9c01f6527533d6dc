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

#include "primsketch/model.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "primsketch/error.h"
#include "primsketch/ops.h"

namespace primsketch {
namespace {

void RequirePositive(int value, const char* field) {
  if (value < 1) {
    throw Error(ErrorKind::kInvalidArgument,
                std::string("model config: ") + field + " must be positive, got " +
                    std::to_string(value));
  }
}

template <typename T>
Tensor<T> Normal(Shape shape, double stddev, std::mt19937_64& rng) {
  Tensor<T> t = Tensor<T>::Zeros(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (T& v : t.values()) v = static_cast<T>(dist(rng));
  return t;
}

template <typename T>
Tensor<T> Filled(Shape shape, T value) {
  Tensor<T> t = Tensor<T>::Zeros(std::move(shape));
  std::fill(t.values().begin(), t.values().end(), value);
  return t;
}

template <typename T>
void ExpectShape(const Tensor<T>& t, const Shape& shape, const std::string& name) {
  if (!t.defined()) {
    throw Error(ErrorKind::kShapeMismatch, "parameter " + name + " missing");
  }
  if (t.shape() != shape) {
    throw Error(ErrorKind::kShapeMismatch,
                "parameter " + name + " has shape " + ShapeString(t.shape()) +
                    ", config expects " + ShapeString(shape));
  }
}

template <typename To, typename From>
Tensor<To> ConvertTensor(const Tensor<From>& t) {
  if (!t.defined()) return {};
  std::vector<To> values(t.values().begin(), t.values().end());
  return Tensor<To>::FromValues(t.shape(), std::move(values), t.requires_grad());
}

constexpr double kInitStd = 0.02;

}  // namespace

void ModelConfig::Validate() const {
  if (layers < 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "model config: layers must be non-negative");
  }
  RequirePositive(heads, "heads");
  RequirePositive(hidden, "hidden");
  RequirePositive(mlp_multiplier, "mlp_multiplier");
  RequirePositive(vocab_size, "vocab_size");
  if (hidden % heads != 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "model config: hidden " + std::to_string(hidden) +
                    " not divisible by heads " + std::to_string(heads));
  }
  if (max_seq_len < 3) {
    throw Error(ErrorKind::kInvalidArgument,
                "model config: max_seq_len must be at least 3");
  }
  if (vocab_size < 5) {
    throw Error(ErrorKind::kInvalidArgument,
                "model config: vocab_size must cover the special tokens");
  }
  if (num_classes < 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "model config: num_classes must be non-negative");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "model config: dropout must lie in [0, 1)");
  }
  if (!(layer_norm_eps > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "model config: layer_norm_eps must be positive");
  }
}

ModelConfig ModelConfig::Desk(int vocab_size) {
  ModelConfig c;
  c.vocab_size = vocab_size;
  return c;
}

ModelConfig ModelConfig::Large(int vocab_size) {
  ModelConfig c;
  c.layers = 8;
  c.heads = 8;
  c.hidden = 512;
  c.vocab_size = vocab_size;
  return c;
}

std::int64_t CountParameters(const ModelConfig& config) {
  config.Validate();
  const std::int64_t H = config.hidden;
  const std::int64_t V = config.vocab_size;
  const std::int64_t M = static_cast<std::int64_t>(config.mlp_multiplier) * H;
  const std::int64_t attention = 4 * H * H + 4 * H;
  const std::int64_t mlp = H * M + M + M * H + H;
  const std::int64_t norms = 4 * H;
  std::int64_t total = V * H + static_cast<std::int64_t>(config.max_seq_len) * H;
  total += config.layers * (attention + mlp + norms);
  total += 2 * H;
  if (!config.tie_lm_head) total += H * V;
  if (config.num_classes > 0) total += H * config.num_classes + config.num_classes;
  return total;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> ModelParameters<T>::Named() const {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  out.emplace_back("token_embedding", token_embedding);
  out.emplace_back("position_embedding", position_embedding);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerParameters<T>& l = layers[i];
    const std::string p = "layer" + std::to_string(i) + ".";
    out.emplace_back(p + "ln1_gain", l.ln1_gain);
    out.emplace_back(p + "ln1_bias", l.ln1_bias);
    out.emplace_back(p + "w_q", l.w_q);
    out.emplace_back(p + "b_q", l.b_q);
    out.emplace_back(p + "w_k", l.w_k);
    out.emplace_back(p + "b_k", l.b_k);
    out.emplace_back(p + "w_v", l.w_v);
    out.emplace_back(p + "b_v", l.b_v);
    out.emplace_back(p + "w_o", l.w_o);
    out.emplace_back(p + "b_o", l.b_o);
    out.emplace_back(p + "ln2_gain", l.ln2_gain);
    out.emplace_back(p + "ln2_bias", l.ln2_bias);
    out.emplace_back(p + "w_fc", l.w_fc);
    out.emplace_back(p + "b_fc", l.b_fc);
    out.emplace_back(p + "w_proj", l.w_proj);
    out.emplace_back(p + "b_proj", l.b_proj);
  }
  out.emplace_back("final_gain", final_gain);
  out.emplace_back("final_bias", final_bias);
  if (lm_head.defined()) out.emplace_back("lm_head", lm_head);
  if (cls_weight.defined()) {
    out.emplace_back("cls_weight", cls_weight);
    out.emplace_back("cls_bias", cls_bias);
  }
  return out;
}

template <typename T>
std::vector<Tensor<T>> ModelParameters<T>::All() const {
  std::vector<Tensor<T>> out;
  for (auto& [name, t] : Named()) out.push_back(t);
  return out;
}

template <typename T>
std::vector<Tensor<T>> ModelParameters<T>::Backbone() const {
  std::vector<Tensor<T>> out;
  for (auto& [name, t] : Named()) {
    if (name != "cls_weight" && name != "cls_bias") out.push_back(t);
  }
  return out;
}

template <typename T>
std::int64_t ModelParameters<T>::ScalarCount() const {
  std::int64_t n = 0;
  for (auto& [name, t] : Named()) n += static_cast<std::int64_t>(t.numel());
  return n;
}

template <typename T>
ModelParameters<T> InitializeParameters(const ModelConfig& config,
                                        std::uint64_t seed) {
  config.Validate();
  std::mt19937_64 rng(seed);
  const std::int64_t H = config.hidden;
  const std::int64_t M = static_cast<std::int64_t>(config.mlp_multiplier) * H;
  ModelParameters<T> p;
  p.token_embedding = Normal<T>({config.vocab_size, H}, kInitStd, rng);
  p.position_embedding = Normal<T>({config.max_seq_len, H}, kInitStd, rng);
  for (int i = 0; i < config.layers; ++i) {
    LayerParameters<T> l;
    l.ln1_gain = Filled<T>({H}, T(1));
    l.ln1_bias = Tensor<T>::Zeros({H});
    l.w_q = Normal<T>({H, H}, kInitStd, rng);
    l.b_q = Tensor<T>::Zeros({H});
    l.w_k = Normal<T>({H, H}, kInitStd, rng);
    l.b_k = Tensor<T>::Zeros({H});
    l.w_v = Normal<T>({H, H}, kInitStd, rng);
    l.b_v = Tensor<T>::Zeros({H});
    l.w_o = Normal<T>({H, H}, kInitStd, rng);
    l.b_o = Tensor<T>::Zeros({H});
    l.ln2_gain = Filled<T>({H}, T(1));
    l.ln2_bias = Tensor<T>::Zeros({H});
    l.w_fc = Normal<T>({H, M}, kInitStd, rng);
    l.b_fc = Tensor<T>::Zeros({M});
    l.w_proj = Normal<T>({M, H}, kInitStd, rng);
    l.b_proj = Tensor<T>::Zeros({H});
    p.layers.push_back(std::move(l));
  }
  p.final_gain = Filled<T>({H}, T(1));
  p.final_bias = Tensor<T>::Zeros({H});
  if (!config.tie_lm_head) {
    p.lm_head = Normal<T>({H, config.vocab_size}, kInitStd, rng);
  }
  if (config.num_classes > 0) {
    p.cls_weight = Tensor<T>::Zeros({H, config.num_classes});
    p.cls_bias = Tensor<T>::Zeros({config.num_classes});
  }
  for (auto& [name, t] : p.Named()) t.set_requires_grad(true);
  return p;
}

template <typename T>
void CheckParameterShapes(const ModelParameters<T>& p, const ModelConfig& config) {
  config.Validate();
  const std::int64_t H = config.hidden;
  const std::int64_t M = static_cast<std::int64_t>(config.mlp_multiplier) * H;
  ExpectShape(p.token_embedding, {config.vocab_size, H}, "token_embedding");
  ExpectShape(p.position_embedding, {config.max_seq_len, H}, "position_embedding");
  if (static_cast<int>(p.layers.size()) != config.layers) {
    throw Error(ErrorKind::kShapeMismatch,
                "parameters hold " + std::to_string(p.layers.size()) +
                    " layers, config expects " + std::to_string(config.layers));
  }
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    const auto& l = p.layers[i];
    const std::string pre = "layer" + std::to_string(i) + ".";
    ExpectShape(l.ln1_gain, {H}, pre + "ln1_gain");
    ExpectShape(l.ln1_bias, {H}, pre + "ln1_bias");
    ExpectShape(l.w_q, {H, H}, pre + "w_q");
    ExpectShape(l.b_q, {H}, pre + "b_q");
    ExpectShape(l.w_k, {H, H}, pre + "w_k");
    ExpectShape(l.b_k, {H}, pre + "b_k");
    ExpectShape(l.w_v, {H, H}, pre + "w_v");
    ExpectShape(l.b_v, {H}, pre + "b_v");
    ExpectShape(l.w_o, {H, H}, pre + "w_o");
    ExpectShape(l.b_o, {H}, pre + "b_o");
    ExpectShape(l.ln2_gain, {H}, pre + "ln2_gain");
    ExpectShape(l.ln2_bias, {H}, pre + "ln2_bias");
    ExpectShape(l.w_fc, {H, M}, pre + "w_fc");
    ExpectShape(l.b_fc, {M}, pre + "b_fc");
    ExpectShape(l.w_proj, {M, H}, pre + "w_proj");
    ExpectShape(l.b_proj, {H}, pre + "b_proj");
  }
  ExpectShape(p.final_gain, {H}, "final_gain");
  ExpectShape(p.final_bias, {H}, "final_bias");
  if (config.tie_lm_head == p.lm_head.defined()) {
    throw Error(ErrorKind::kShapeMismatch,
                std::string("lm_head ") +
                    (p.lm_head.defined() ? "present but config ties it"
                                         : "missing but config unties it"));
  }
  if (p.lm_head.defined()) {
    ExpectShape(p.lm_head, {H, config.vocab_size}, "lm_head");
  }
  if (config.num_classes > 0) {
    ExpectShape(p.cls_weight, {H, config.num_classes}, "cls_weight");
    ExpectShape(p.cls_bias, {config.num_classes}, "cls_bias");
  } else if (p.cls_weight.defined()) {
    throw Error(ErrorKind::kShapeMismatch,
                "cls_weight present but config has no classes");
  }
}

template <typename To, typename From>
ModelParameters<To> ConvertParameters(const ModelParameters<From>& p) {
  ModelParameters<To> out;
  out.token_embedding = ConvertTensor<To>(p.token_embedding);
  out.position_embedding = ConvertTensor<To>(p.position_embedding);
  for (const auto& l : p.layers) {
    LayerParameters<To> c;
    c.ln1_gain = ConvertTensor<To>(l.ln1_gain);
    c.ln1_bias = ConvertTensor<To>(l.ln1_bias);
    c.w_q = ConvertTensor<To>(l.w_q);
    c.b_q = ConvertTensor<To>(l.b_q);
    c.w_k = ConvertTensor<To>(l.w_k);
    c.b_k = ConvertTensor<To>(l.b_k);
    c.w_v = ConvertTensor<To>(l.w_v);
    c.b_v = ConvertTensor<To>(l.b_v);
    c.w_o = ConvertTensor<To>(l.w_o);
    c.b_o = ConvertTensor<To>(l.b_o);
    c.ln2_gain = ConvertTensor<To>(l.ln2_gain);
    c.ln2_bias = ConvertTensor<To>(l.ln2_bias);
    c.w_fc = ConvertTensor<To>(l.w_fc);
    c.b_fc = ConvertTensor<To>(l.b_fc);
    c.w_proj = ConvertTensor<To>(l.w_proj);
    c.b_proj = ConvertTensor<To>(l.b_proj);
    out.layers.push_back(std::move(c));
  }
  out.final_gain = ConvertTensor<To>(p.final_gain);
  out.final_bias = ConvertTensor<To>(p.final_bias);
  out.lm_head = ConvertTensor<To>(p.lm_head);
  out.cls_weight = ConvertTensor<To>(p.cls_weight);
  out.cls_bias = ConvertTensor<To>(p.cls_bias);
  return out;
}

template <typename T>
ModelParameters<T> CloneParameters(const ModelParameters<T>& p) {
  // Same-type conversion copies every buffer.
  return ConvertParameters<T, T>(p);
}

CausalMask::CausalMask(std::span<const int> ids, int pad_id) {
  key_valid_.reserve(ids.size());
  for (int id : ids) key_valid_.push_back(id == pad_id ? 0 : 1);
}

TokenBatch TokenBatch::FromSequences(std::span<const std::vector<int>> sequences,
                                     int pad_id, std::int64_t min_len) {
  TokenBatch b;
  b.batch = static_cast<std::int64_t>(sequences.size());
  b.seq_len = min_len;
  for (const auto& s : sequences) {
    b.seq_len = std::max<std::int64_t>(b.seq_len, static_cast<std::int64_t>(s.size()));
  }
  b.ids.assign(static_cast<std::size_t>(b.batch * b.seq_len), pad_id);
  b.valid.assign(b.ids.size(), 0);
  for (std::int64_t r = 0; r < b.batch; ++r) {
    const auto& s = sequences[r];
    std::int64_t len = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      b.ids[r * b.seq_len + i] = s[i];
      const bool valid = s[i] != pad_id;
      b.valid[r * b.seq_len + i] = valid ? 1 : 0;
      if (valid) len = static_cast<std::int64_t>(i) + 1;
    }
    b.lengths.push_back(len);
  }
  return b;
}

template <typename T>
TransformerModel<T>::TransformerModel(ModelConfig config, std::uint64_t seed)
    : config_(config), params_(InitializeParameters<T>(config, seed)) {}

template <typename T>
TransformerModel<T>::TransformerModel(ModelConfig config,
                                      ModelParameters<T> params)
    : config_(config), params_(std::move(params)) {
  CheckParameterShapes(params_, config_);
}

template <typename T>
void TransformerModel<T>::CheckBatch(const TokenBatch& batch) const {
  if (batch.seq_len > config_.max_seq_len) {
    throw Error(ErrorKind::kInvalidArgument,
                "sequence length " + std::to_string(batch.seq_len) +
                    " exceeds context window " +
                    std::to_string(config_.max_seq_len));
  }
  if (batch.batch < 1 || batch.seq_len < 1) {
    throw Error(ErrorKind::kInvalidArgument, "empty token batch");
  }
  for (std::size_t i = 0; i < batch.ids.size(); ++i) {
    if (batch.ids[i] < 0 || batch.ids[i] >= config_.vocab_size) {
      throw Error(ErrorKind::kInvalidArgument,
                  "token id " + std::to_string(batch.ids[i]) +
                      " outside the model vocabulary of " +
                      std::to_string(config_.vocab_size));
    }
  }
}

template <typename T>
Tensor<T> TransformerModel<T>::Hidden(Tape<T>* tape, const TokenBatch& batch,
                                      const ForwardOptions& options) const {
  CheckBatch(batch);
  const double drop = options.training ? config_.dropout : 0.0;
  if (drop > 0.0 && options.rng == nullptr) {
    throw Error(ErrorKind::kInvalidArgument, "training forward needs an rng");
  }
  const T eps = static_cast<T>(config_.layer_norm_eps);
  std::vector<int> positions(batch.ids.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    positions[i] = static_cast<int>(i % static_cast<std::size_t>(batch.seq_len));
  }
  Tensor<T> x = Add(tape, Embedding(tape, params_.token_embedding, batch.ids),
                    Embedding(tape, params_.position_embedding, positions));
  if (drop > 0.0) x = Dropout(tape, x, drop, *options.rng);

  AttentionLayout layout;
  layout.batch = batch.batch;
  layout.seq_len = batch.seq_len;
  layout.heads = config_.heads;
  layout.key_valid = batch.valid;
  layout.dropout = drop;
  layout.rng = options.rng;

  for (const LayerParameters<T>& l : params_.layers) {
    Tensor<T> h = LayerNorm(tape, x, l.ln1_gain, l.ln1_bias, eps);
    Tensor<T> q = Linear(tape, h, l.w_q, l.b_q);
    Tensor<T> k = Linear(tape, h, l.w_k, l.b_k);
    Tensor<T> v = Linear(tape, h, l.w_v, l.b_v);
    std::vector<T> probs;
    Tensor<T> a = CausalSelfAttention(
        tape, q, k, v, layout,
        options.attention_probs != nullptr ? &probs : nullptr);
    if (options.attention_probs != nullptr) {
      options.attention_probs->emplace_back(probs.begin(), probs.end());
    }
    a = Linear(tape, a, l.w_o, l.b_o);
    if (drop > 0.0) a = Dropout(tape, a, drop, *options.rng);
    x = Add(tape, x, a);

    h = LayerNorm(tape, x, l.ln2_gain, l.ln2_bias, eps);
    Tensor<T> m = Gelu(tape, Linear(tape, h, l.w_fc, l.b_fc));
    m = Linear(tape, m, l.w_proj, l.b_proj);
    if (drop > 0.0) m = Dropout(tape, m, drop, *options.rng);
    x = Add(tape, x, m);
  }
  return LayerNorm(tape, x, params_.final_gain, params_.final_bias, eps);
}

template <typename T>
Tensor<T> TransformerModel<T>::ForwardLm(Tape<T>* tape, const TokenBatch& batch,
                                         const ForwardOptions& options) const {
  Tensor<T> h = Hidden(tape, batch, options);
  if (config_.tie_lm_head) {
    return MatMulTransposed(tape, h, params_.token_embedding);
  }
  return Linear(tape, h, params_.lm_head, Tensor<T>());
}

template <typename T>
std::vector<std::int64_t> TransformerModel<T>::EosRows(
    const TokenBatch& batch) const {
  std::vector<std::int64_t> rows;
  rows.reserve(batch.batch);
  for (std::int64_t r = 0; r < batch.batch; ++r) {
    std::int64_t found = -1;
    for (std::int64_t i = 0; i < batch.seq_len; ++i) {
      if (batch.ids[r * batch.seq_len + i] == eos_id()) {
        found = i;
        break;
      }
    }
    if (found < 0) {
      throw Error(ErrorKind::kInvalidArgument,
                  "classification input row " + std::to_string(r) +
                      " has no EOS token");
    }
    rows.push_back(r * batch.seq_len + found);
  }
  return rows;
}

template <typename T>
Tensor<T> TransformerModel<T>::ForwardClassify(
    Tape<T>* tape, const TokenBatch& batch,
    const ForwardOptions& options) const {
  if (config_.num_classes < 1 || !params_.cls_weight.defined()) {
    throw Error(ErrorKind::kInvalidArgument,
                "model has no classification head");
  }
  const std::vector<std::int64_t> rows = EosRows(batch);
  Tensor<T> h = Hidden(tape, batch, options);
  Tensor<T> pooled = GatherRows(tape, h, rows);
  return Linear(tape, pooled, params_.cls_weight, params_.cls_bias);
}

template <typename T>
Tensor<T> TransformerModel<T>::ForwardLm(const TokenSequence& tokens) const {
  std::vector<std::vector<int>> one{tokens.ids};
  return ForwardLm(nullptr, TokenBatch::FromSequences(one, pad_id()));
}

template <typename T>
Tensor<T> TransformerModel<T>::ForwardClassify(const TokenSequence& tokens) const {
  std::vector<std::vector<int>> one{tokens.ids};
  Tensor<T> logits = ForwardClassify(nullptr, TokenBatch::FromSequences(one, pad_id()));
  std::vector<T> values(logits.values().begin(), logits.values().end());
  return Tensor<T>::FromValues({config_.num_classes}, std::move(values));
}

template <typename T>
void TransformerModel<T>::ResetClassifierHead(int num_classes) {
  if (num_classes < 1) {
    throw Error(ErrorKind::kInvalidArgument, "classifier needs at least one class");
  }
  config_.num_classes = num_classes;
  params_.cls_weight = Tensor<T>::Zeros({config_.hidden, num_classes}, true);
  params_.cls_bias = Tensor<T>::Zeros({num_classes}, true);
}

template <typename T>
IncrementalDecoder<T>::IncrementalDecoder(const TransformerModel<T>& model)
    : model_(model),
      keys_(model.config().layers),
      values_(model.config().layers) {}

template <typename T>
std::vector<T> IncrementalDecoder<T>::Push(int token) {
  const ModelConfig& cfg = model_.config();
  const ModelParameters<T>& p = model_.params();
  if (length_ >= static_cast<std::size_t>(cfg.max_seq_len)) {
    throw Error(ErrorKind::kInvalidArgument,
                "sequence exceeds max_seq_len " + std::to_string(cfg.max_seq_len));
  }
  if (token < 0 || token >= cfg.vocab_size) {
    throw Error(ErrorKind::kInvalidArgument,
                "token id " + std::to_string(token) + " outside vocabulary");
  }
  const T eps = static_cast<T>(cfg.layer_norm_eps);
  const int pos = static_cast<int>(length_);
  const std::int64_t hidden = cfg.hidden;
  const std::int64_t d = cfg.head_dim();
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(d)));
  Tensor<T> x = Add<T>(nullptr, Embedding<T>(nullptr, p.token_embedding, std::span<const int>(&token, 1)),
                       Embedding<T>(nullptr, p.position_embedding, std::span<const int>(&pos, 1)));
  const std::size_t n = length_ + 1;
  for (std::size_t li = 0; li < p.layers.size(); ++li) {
    const LayerParameters<T>& l = p.layers[li];
    Tensor<T> h = LayerNorm<T>(nullptr, x, l.ln1_gain, l.ln1_bias, eps);
    Tensor<T> q = Linear<T>(nullptr, h, l.w_q, l.b_q);
    Tensor<T> k = Linear<T>(nullptr, h, l.w_k, l.b_k);
    Tensor<T> v = Linear<T>(nullptr, h, l.w_v, l.b_v);
    keys_[li].insert(keys_[li].end(), k.values().begin(), k.values().end());
    values_[li].insert(values_[li].end(), v.values().begin(), v.values().end());
    std::vector<T> attn(hidden, T(0));
    std::vector<T> scores(n);
    for (std::int64_t head = 0; head < cfg.heads; ++head) {
      const std::int64_t off = head * d;
      T max_score = -std::numeric_limits<T>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        T s = 0;
        for (std::int64_t c = 0; c < d; ++c) {
          s += q.values()[off + c] * keys_[li][j * hidden + off + c];
        }
        scores[j] = s * scale;
        max_score = std::max(max_score, scores[j]);
      }
      T total = 0;
      for (std::size_t j = 0; j < n; ++j) {
        scores[j] = std::exp(scores[j] - max_score);
        total += scores[j];
      }
      for (std::size_t j = 0; j < n; ++j) {
        const T w = scores[j] / total;
        for (std::int64_t c = 0; c < d; ++c) {
          attn[off + c] += w * values_[li][j * hidden + off + c];
        }
      }
    }
    Tensor<T> a = Tensor<T>::FromValues({1, hidden}, std::move(attn));
    a = Linear<T>(nullptr, a, l.w_o, l.b_o);
    x = Add<T>(nullptr, x, a);
    h = LayerNorm<T>(nullptr, x, l.ln2_gain, l.ln2_bias, eps);
    Tensor<T> m = Gelu<T>(nullptr, Linear<T>(nullptr, h, l.w_fc, l.b_fc));
    m = Linear<T>(nullptr, m, l.w_proj, l.b_proj);
    x = Add<T>(nullptr, x, m);
  }
  x = LayerNorm<T>(nullptr, x, p.final_gain, p.final_bias, eps);
  Tensor<T> logits =
      cfg.tie_lm_head ? MatMulTransposed<T>(nullptr, x, p.token_embedding)
                      : Linear<T>(nullptr, x, p.lm_head, Tensor<T>());
  ++length_;
  return std::vector<T>(logits.values().begin(), logits.values().end());
}

template class IncrementalDecoder<float>;
template class IncrementalDecoder<double>;

template struct ModelParameters<float>;
template struct ModelParameters<double>;
template ModelParameters<float> InitializeParameters(const ModelConfig&, std::uint64_t);
template ModelParameters<double> InitializeParameters(const ModelConfig&, std::uint64_t);
template void CheckParameterShapes(const ModelParameters<float>&, const ModelConfig&);
template void CheckParameterShapes(const ModelParameters<double>&, const ModelConfig&);
template ModelParameters<float> ConvertParameters(const ModelParameters<float>&);
template ModelParameters<float> ConvertParameters(const ModelParameters<double>&);
template ModelParameters<double> ConvertParameters(const ModelParameters<float>&);
template ModelParameters<double> ConvertParameters(const ModelParameters<double>&);
template ModelParameters<float> CloneParameters(const ModelParameters<float>&);
template ModelParameters<double> CloneParameters(const ModelParameters<double>&);
template class TransformerModel<float>;
template class TransformerModel<double>;

}  // namespace primsketch

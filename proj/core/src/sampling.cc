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

#include "primsketch/sampling.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "primsketch/error.h"
#include "primsketch/primitives.h"

namespace primsketch {

void SamplerConfig::Validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorKind::kInvalidArgument, "temperature must be > 0");
  }
  if (max_new_tokens < 1) {
    throw Error(ErrorKind::kInvalidArgument, "max_new_tokens must be >= 1");
  }
  if (num_samples < 1) {
    throw Error(ErrorKind::kInvalidArgument, "num_samples must be >= 1");
  }
  if (top_k && *top_k < 1) {
    throw Error(ErrorKind::kInvalidArgument, "top_k must be >= 1");
  }
  if (top_p && !(*top_p > 0.0 && *top_p <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "top_p must be in (0, 1]");
  }
}

const std::vector<double>& TemperatureSweep() {
  static const std::vector<double> sweep{0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 2.0};
  return sweep;
}

std::vector<double> SamplingDistribution(std::span<const double> logits,
                                         double temperature,
                                         std::span<const int> masked) {
  if (!(temperature > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "temperature must be > 0");
  }
  if (logits.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "empty logits");
  }
  std::vector<char> off(logits.size(), 0);
  for (int id : masked) {
    if (id >= 0 && static_cast<std::size_t>(id) < logits.size()) off[id] = 1;
  }
  double max_scaled = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i])) {
      throw Error(ErrorKind::kInvalidArgument,
                  "non-finite logit at index " + std::to_string(i));
    }
    if (!off[i]) max_scaled = std::max(max_scaled, logits[i] / temperature);
  }
  if (!std::isfinite(max_scaled)) {
    throw Error(ErrorKind::kInvalidArgument, "every token is masked");
  }
  std::vector<double> p(logits.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (off[i]) continue;
    p[i] = std::exp(logits[i] / temperature - max_scaled);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

double ShannonEntropy(std::span<const double> probabilities) {
  double h = 0.0;
  for (double p : probabilities) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double UniformUnit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

namespace {

void ApplyFilters(std::vector<double>& p, std::optional<int> top_k,
                  std::optional<double> top_p) {
  if (!top_k && !top_p) return;
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
  std::size_t keep = p.size();
  if (top_k) keep = std::min<std::size_t>(keep, *top_k);
  if (top_p) {
    double cum = 0.0;
    for (std::size_t r = 0; r < keep; ++r) {
      cum += p[order[r]];
      if (cum >= *top_p) {
        keep = r + 1;
        break;
      }
    }
  }
  double total = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (r >= keep) {
      p[order[r]] = 0.0;
    } else {
      total += p[order[r]];
    }
  }
  for (double& v : p) v /= total;
}

int Draw(std::span<const double> p, std::mt19937_64& rng) {
  const double u = UniformUnit(rng);
  double cum = 0.0;
  int last = -1;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    cum += p[i];
    last = static_cast<int>(i);
    if (u < cum) return last;
  }
  return last;  // rounding left u above the final cumulative sum
}

std::vector<double> Widen(std::span<const float> v) {
  return std::vector<double>(v.begin(), v.end());
}
std::vector<double> Widen(std::span<const double> v) {
  return std::vector<double>(v.begin(), v.end());
}

void CheckValidity(GeneratedSequence& seq, const Vocabulary& vocab) {
  std::vector<int> ids = seq.tokens;
  if (ids.empty() || ids.back() != vocab.eos()) ids.push_back(vocab.eos());
  try {
    Decode(std::span<const int>(ids), vocab);
    seq.valid = true;
    seq.invalid_reason.clear();
  } catch (const TokenError& e) {
    seq.valid = false;
    seq.invalid_reason = e.what();
  }
}

}  // namespace

int SampleNext(std::span<const double> logits, double temperature,
               const Vocabulary& vocab, std::mt19937_64& rng,
               std::optional<int> top_k, std::optional<double> top_p) {
  if (logits.size() != static_cast<std::size_t>(vocab.size())) {
    throw Error(ErrorKind::kShapeMismatch,
                "logits have " + std::to_string(logits.size()) +
                    " entries, vocabulary has " + std::to_string(vocab.size()));
  }
  const int masked[] = {vocab.bos(), vocab.pad()};
  std::vector<double> p = SamplingDistribution(logits, temperature, masked);
  ApplyFilters(p, top_k, top_p);
  return Draw(p, rng);
}

std::string_view StopReasonName(StopReason reason) {
  return reason == StopReason::kEos ? "eos" : "length_limit";
}

std::string GenerationResult::ToJson() const {
  nlohmann::json out;
  out["seed"] = seed;
  out["prefix_length"] = prefix_length;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : sequences) {
    nlohmann::json j{{"tokens", s.tokens},
                     {"stop_reason", StopReasonName(s.stop_reason)},
                     {"seed", s.seed},
                     {"valid", s.valid}};
    if (!s.valid) j["invalid_reason"] = s.invalid_reason;
    arr.push_back(std::move(j));
  }
  out["sequences"] = std::move(arr);
  return out.dump();
}

std::uint64_t SampleSeed(std::uint64_t request_seed, int index) {
  return MixSeed(request_seed, static_cast<std::uint64_t>(index));
}

template <typename T>
GenerationResult Complete(const TransformerModel<T>& model,
                          std::span<const int> prefix,
                          const SamplerConfig& sampler) {
  sampler.Validate();
  const ModelConfig& cfg = model.config();
  const Vocabulary vocab(cfg.vocab_size - 4);
  std::vector<int> head(prefix.begin(), prefix.end());
  if (head.empty()) head.push_back(vocab.bos());
  if (head.front() != vocab.bos()) {
    throw TokenError(0, "missing BOS");
  }
  if (head.size() > 1 && head.back() == vocab.eos()) head.pop_back();
  for (std::size_t i = 1; i < head.size(); ++i) {
    if (!vocab.IsPrimitive(head[i]) && head[i] != vocab.sep()) {
      throw TokenError(i, "prefix token " + vocab.TokenName(head[i]) +
                              " not allowed");
    }
  }
  if (head.size() >= static_cast<std::size_t>(cfg.max_seq_len)) {
    throw Error(ErrorKind::kInvalidArgument,
                "prefix already at length limit (" + std::to_string(head.size()) +
                    " tokens, max_seq_len " + std::to_string(cfg.max_seq_len) + ")");
  }
  const std::int64_t budget = std::min<std::int64_t>(
      sampler.max_new_tokens,
      cfg.max_seq_len - static_cast<std::int64_t>(head.size()));

  GenerationResult result;
  result.prefix_length = head.size();
  result.seed = sampler.seed;
  for (int s = 0; s < sampler.num_samples; ++s) {
    GeneratedSequence seq;
    seq.seed = SampleSeed(sampler.seed, s);
    seq.tokens = head;
    std::mt19937_64 rng(seq.seed);
    IncrementalDecoder<T> decoder(model);
    std::vector<double> logits;
    for (int id : head) logits = Widen(std::span<const T>(decoder.Push(id)));
    seq.stop_reason = StopReason::kLengthLimit;
    for (std::int64_t step = 0; step < budget; ++step) {
      const int masked[] = {vocab.bos(), vocab.pad()};
      std::vector<double> p =
          SamplingDistribution(logits, sampler.temperature, masked);
      seq.entropy.push_back(ShannonEntropy(p));
      ApplyFilters(p, sampler.top_k, sampler.top_p);
      const int next = Draw(p, rng);
      seq.tokens.push_back(next);
      if (next == vocab.eos()) {
        seq.stop_reason = StopReason::kEos;
        break;
      }
      if (step + 1 < budget) {
        logits = Widen(std::span<const T>(decoder.Push(next)));
      }
    }
    CheckValidity(seq, vocab);
    result.sequences.push_back(std::move(seq));
  }
  return result;
}

template <typename T>
GenerationResult Generate(const TransformerModel<T>& model,
                          const SamplerConfig& sampler) {
  return Complete(model, std::span<const int>(), sampler);
}

GenerationResult Generate(const Checkpoint& checkpoint,
                          const SamplerConfig& sampler) {
  return Complete(checkpoint, std::span<const int>(), sampler);
}

GenerationResult Complete(const Checkpoint& checkpoint,
                          std::span<const int> prefix,
                          const SamplerConfig& sampler) {
  if (checkpoint.precision == Precision::kFloat64) {
    return Complete(checkpoint.MakeModel<double>(), prefix, sampler);
  }
  return Complete(checkpoint.MakeModel<float>(), prefix, sampler);
}

std::vector<int> PrefixTokens(const Sketch& sketch,
                              const PrimitiveDictionary& dict) {
  const Vocabulary vocab(dict.orientation_count());
  if (sketch.points.empty()) return {vocab.bos()};
  TokenSequence seq = Encode(Abstract(Normalize(sketch), dict), vocab);
  seq.ids.pop_back();
  return seq.ids;
}

template GenerationResult Complete<float>(const TransformerModel<float>&,
                                          std::span<const int>,
                                          const SamplerConfig&);
template GenerationResult Complete<double>(const TransformerModel<double>&,
                                           std::span<const int>,
                                           const SamplerConfig&);
template GenerationResult Generate<float>(const TransformerModel<float>&,
                                          const SamplerConfig&);
template GenerationResult Generate<double>(const TransformerModel<double>&,
                                           const SamplerConfig&);

}  // namespace primsketch

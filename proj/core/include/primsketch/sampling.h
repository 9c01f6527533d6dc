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

#ifndef PRIMSKETCH_SAMPLING_H_
#define PRIMSKETCH_SAMPLING_H_

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "primsketch/checkpoint.h"
#include "primsketch/model.h"
#include "primsketch/stroke_data.h"
#include "primsketch/tokenizer.h"

namespace primsketch {

struct SamplerConfig {
  double temperature = 1.0;
  std::int64_t max_new_tokens = 512;
  std::uint64_t seed = 0;
  int num_samples = 1;
  // Off by default: pure temperature sampling.
  std::optional<int> top_k;
  std::optional<double> top_p;

  void Validate() const;
};

// Temperature sweep preset, 0.6 through 2.0.
const std::vector<double>& TemperatureSweep();

// softmax(logits / t) with the `masked` ids forced to probability zero.
// Throws on non-finite logits or t <= 0.
std::vector<double> SamplingDistribution(std::span<const double> logits,
                                         double temperature,
                                         std::span<const int> masked = {});

double ShannonEntropy(std::span<const double> probabilities);

// Uniform double in [0, 1) from the top 53 bits of one draw.
double UniformUnit(std::mt19937_64& rng);

// Draws one id from softmax(logits / t), never BOS or PAD.
int SampleNext(std::span<const double> logits, double temperature,
               const Vocabulary& vocab, std::mt19937_64& rng,
               std::optional<int> top_k = std::nullopt,
               std::optional<double> top_p = std::nullopt);

enum class StopReason { kEos, kLengthLimit };
std::string_view StopReasonName(StopReason reason);

struct GeneratedSequence {
  std::vector<int> tokens;  // prefix (EOS stripped) + continuation
  StopReason stop_reason = StopReason::kEos;
  std::uint64_t seed = 0;   // per-sample stream seed
  bool valid = true;        // decodes under tokenizer rules
  std::string invalid_reason;
  std::vector<double> entropy;  // per sampled step, nats
};

struct GenerationResult {
  std::vector<GeneratedSequence> sequences;
  std::size_t prefix_length = 0;
  std::uint64_t seed = 0;

  // [{tokens, stop_reason, seed, valid}] plus the request seed.
  std::string ToJson() const;
};

// Seed of sample i, derived from the request seed.
std::uint64_t SampleSeed(std::uint64_t request_seed, int index);

// Samples num_samples continuations of `prefix` (BOS first, no PAD; a
// trailing EOS is stripped). Throws if the prefix already fills the context.
template <typename T>
GenerationResult Complete(const TransformerModel<T>& model,
                          std::span<const int> prefix,
                          const SamplerConfig& sampler);

// Complete with the prefix [BOS].
template <typename T>
GenerationResult Generate(const TransformerModel<T>& model,
                          const SamplerConfig& sampler);

// Checkpoint forms run at the checkpoint's stored precision.
GenerationResult Generate(const Checkpoint& checkpoint,
                          const SamplerConfig& sampler);
GenerationResult Complete(const Checkpoint& checkpoint,
                          std::span<const int> prefix,
                          const SamplerConfig& sampler);

// Normalize -> abstract -> encode, EOS removed. An empty sketch gives [BOS].
std::vector<int> PrefixTokens(const Sketch& sketch,
                              const PrimitiveDictionary& dict);

}  // namespace primsketch

#endif  // PRIMSKETCH_SAMPLING_H_

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

#ifndef PRIMSKETCH_CHECKPOINT_H_
#define PRIMSKETCH_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "primsketch/adam.h"
#include "primsketch/model.h"
#include "primsketch/primitives.h"
#include "primsketch/tokenizer.h"

namespace primsketch {

enum class Precision : std::uint8_t { kFloat32, kFloat64 };

std::string_view PrecisionName(Precision p);

struct TrainingState {
  std::string task = "init";  // init | pretrain | completion | classify
  std::int64_t epoch = 0;
  std::int64_t best_epoch = -1;
  double best_metric = 0.0;
  std::optional<AdamState> optimizer;
};

// Everything needed to resume or serve a model without side files.
struct Checkpoint {
  ModelConfig config;
  int orientations = PrimitiveDictionary::kDefaultOrientations;
  double primitive_length = PrimitiveDictionary::kDefaultLength;
  Precision precision = Precision::kFloat32;
  // Stored widened to double; float32 checkpoints round-trip exactly.
  ModelParameters<double> params;
  std::vector<std::string> class_names;  // classifier labels or the
                                         // fine-tuning class
  TrainingState state;

  PrimitiveDictionary dictionary() const {
    return PrimitiveDictionary(orientations, primitive_length);
  }
  Vocabulary vocabulary() const { return Vocabulary(orientations); }

  template <typename T>
  TransformerModel<T> MakeModel() const {
    return TransformerModel<T>(config, ConvertParameters<T>(params));
  }

  template <typename T>
  static Checkpoint FromModel(const TransformerModel<T>& model,
                              const PrimitiveDictionary& dict) {
    Checkpoint c;
    c.config = model.config();
    c.orientations = dict.orientation_count();
    c.primitive_length = dict.primitive_length();
    c.precision = sizeof(T) == 4 ? Precision::kFloat32 : Precision::kFloat64;
    c.params = ConvertParameters<double>(model.params());
    return c;
  }
};

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

std::string SerializeCheckpoint(const Checkpoint& checkpoint);
// Throws kFormat on bad magic, version mismatch, or a truncated payload.
Checkpoint DeserializeCheckpoint(std::string_view bytes);

void SaveCheckpoint(const Checkpoint& checkpoint,
                    const std::filesystem::path& path);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);
// Also verifies the stored architecture equals `expected`, naming the first
// mismatched field.
Checkpoint LoadCheckpoint(const std::filesystem::path& path,
                          const ModelConfig& expected);

// Throws kShapeMismatch naming the first differing architecture field.
void RequireSameArchitecture(const ModelConfig& stored,
                             const ModelConfig& expected);

}  // namespace primsketch

#endif  // PRIMSKETCH_CHECKPOINT_H_

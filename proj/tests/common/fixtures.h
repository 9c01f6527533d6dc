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

#ifndef PRIMSKETCH_TESTS_COMMON_FIXTURES_H_
#define PRIMSKETCH_TESTS_COMMON_FIXTURES_H_

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "primsketch/model.h"
#include "primsketch/primitives.h"
#include "primsketch/stroke_data.h"
#include "primsketch/tokenizer.h"

namespace primsketch::testing {

inline ModelConfig ToyConfig(int layers = 2, int heads = 2, int hidden = 16,
                             int max_seq_len = 64, int num_classes = 0) {
  ModelConfig c;
  c.layers = layers;
  c.heads = heads;
  c.hidden = hidden;
  c.max_seq_len = max_seq_len;
  c.vocab_size = PrimitiveDictionary::kDefaultOrientations + 4;
  c.num_classes = num_classes;
  return c;
}

// Classes used by the scaled-down pre-training experiments: fine-tuning
// classes are disjoint from pre-training classes.
inline const std::vector<std::string>& FinetuneShapes() {
  static const std::vector<std::string> s{"circle", "house", "square", "star",
                                          "triangle"};
  return s;
}

inline const std::vector<std::string>& PretrainShapes() {
  static const std::vector<std::string> s{"arrow",    "cross",   "diamond",
                                          "envelope", "hexagon", "ladder",
                                          "pentagon", "spiral",  "wave",
                                          "zigzag"};
  return s;
}

// Token sequence (with BOS/EOS) of a synthetic shape.
inline std::vector<int> ShapeTokens(const std::string& shape, double jitter,
                                    std::uint64_t seed,
                                    const PrimitiveDictionary& dict = {}) {
  const Vocabulary vocab(dict.orientation_count());
  return Encode(Abstract(Synthesize(shape, jitter, seed), dict), vocab).ids;
}

inline std::filesystem::path GoldenDir() {
#ifdef PRIMSKETCH_GOLDEN_DIR
  return PRIMSKETCH_GOLDEN_DIR;
#else
  return "tests/golden";
#endif
}

inline std::filesystem::path ScratchDir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("primsketch_" + name);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace primsketch::testing

#endif  // PRIMSKETCH_TESTS_COMMON_FIXTURES_H_

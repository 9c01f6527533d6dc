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


#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.h"
#include "primsketch/binary_io.h"
#include "primsketch/checkpoint.h"
#include "primsketch/error.h"

namespace primsketch {
namespace {

using testing::ToyConfig;

TokenBatch ProbeBatch() {
  const std::vector<std::vector<int>> seqs{
      testing::ShapeTokens("square", 0.0, 1), testing::ShapeTokens("circle", 0.02, 2),
      testing::ShapeTokens("zigzag", 0.01, 3)};
  return TokenBatch::FromSequences(seqs, 39);
}

template <typename T>
void ExpectRoundTripBitIdentical() {
  ModelConfig cfg = ToyConfig(2, 2, 16, 128, 3);
  TransformerModel<T> model(cfg, 17);
  for (auto& [name, t] : model.params().Named()) {
    std::mt19937_64 rng(name.size());
    for (T& v : t.values()) v += T(0.01) * T(int(rng() % 200) - 100) / T(100);
  }
  Checkpoint c = Checkpoint::FromModel(model, PrimitiveDictionary());
  c.class_names = {"a", "b", "c"};
  c.state.task = "classify";
  c.state.epoch = 4;
  c.state.best_epoch = 2;
  c.state.best_metric = 0.75;
  const auto path = testing::ScratchDir("ckpt") / (sizeof(T) == 4 ? "f32.ckpt" : "f64.ckpt");
  SaveCheckpoint(c, path);
  const Checkpoint back = LoadCheckpoint(path);
  EXPECT_EQ(back.config, c.config);
  EXPECT_EQ(back.class_names, c.class_names);
  EXPECT_EQ(back.state.task, "classify");
  EXPECT_EQ(back.state.best_epoch, 2);
  EXPECT_EQ(back.precision, c.precision);
  const TokenBatch probe = ProbeBatch();
  const auto reloaded = back.MakeModel<T>();
  for (auto fn : {0, 1}) {
    const Tensor<T> a = fn ? model.ForwardClassify(nullptr, probe) : model.ForwardLm(nullptr, probe);
    const Tensor<T> b = fn ? reloaded.ForwardClassify(nullptr, probe) : reloaded.ForwardLm(nullptr, probe);
    ASSERT_EQ(a.numel(), b.numel());
    for (std::size_t i = 0; i < a.numel(); ++i) ASSERT_EQ(a.values()[i], b.values()[i]) << i;
  }
  EXPECT_EQ(SerializeCheckpoint(back), SerializeCheckpoint(c));
}

TEST(Checkpoint, Float32RoundTripIsBitIdentical) { ExpectRoundTripBitIdentical<float>(); }
TEST(Checkpoint, Float64RoundTripIsBitIdentical) { ExpectRoundTripBitIdentical<double>(); }

TEST(Checkpoint, OptimizerStateRoundTrips) {
  TransformerModel<double> model(ToyConfig(1, 1, 8, 16), 3);
  Checkpoint c = Checkpoint::FromModel(model, PrimitiveDictionary());
  c.precision = Precision::kFloat64;
  AdamState s;
  s.step = 12;
  s.config.learning_rate = 1e-3;
  for (const auto& [n, t] : c.params.Named()) {
    s.first_moment.emplace_back(t.numel(), 0.125);
    s.second_moment.emplace_back(t.numel(), 0.5);
  }
  c.state.optimizer = s;
  const Checkpoint back = DeserializeCheckpoint(SerializeCheckpoint(c));
  ASSERT_TRUE(back.state.optimizer.has_value());
  EXPECT_EQ(back.state.optimizer->step, 12);
  EXPECT_EQ(back.state.optimizer->first_moment, s.first_moment);
  EXPECT_EQ(back.state.optimizer->second_moment, s.second_moment);
}

TEST(Checkpoint, WrongMagicRejectedWithoutMutation) {
  TransformerModel<float> model(ToyConfig(1, 1, 8, 16), 3);
  const Checkpoint c = Checkpoint::FromModel(model, PrimitiveDictionary());
  std::string bytes = SerializeCheckpoint(c);
  bytes[0] = 'X';
  const auto path = testing::ScratchDir("ckpt") / "bad_magic.ckpt";
  WriteFileBytes(path, bytes);
  Checkpoint target = c;
  try {
    target = LoadCheckpoint(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
    EXPECT_NE(std::string(e.what()).find("magic"), std::string::npos);
  }
  EXPECT_EQ(SerializeCheckpoint(target), SerializeCheckpoint(c));
  EXPECT_EQ(ReadFileBytes(path), bytes);
}

TEST(Checkpoint, VersionMismatchNamesBothVersions) {
  TransformerModel<float> model(ToyConfig(1, 1, 8, 16), 3);
  std::string bytes = SerializeCheckpoint(Checkpoint::FromModel(model, PrimitiveDictionary()));
  bytes[4] = 7;
  try {
    DeserializeCheckpoint(bytes);
    FAIL();
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("version 7"), std::string::npos) << msg;
    EXPECT_NE(msg.find("expected 1"), std::string::npos) << msg;
  }
}

TEST(Checkpoint, TruncationAndTrailingBytesRejected) {
  TransformerModel<float> model(ToyConfig(1, 1, 8, 16), 3);
  const std::string bytes = SerializeCheckpoint(Checkpoint::FromModel(model, PrimitiveDictionary()));
  for (std::size_t cut : {std::size_t{2}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
    EXPECT_THROW(DeserializeCheckpoint(std::string_view(bytes).substr(0, cut)), Error) << cut;
  }
  EXPECT_THROW(DeserializeCheckpoint(bytes + "x"), Error);
}

TEST(Checkpoint, ArchitectureMismatchNamesField) {
  TransformerModel<float> model(ToyConfig(2, 2, 16, 32), 3);
  const auto path = testing::ScratchDir("ckpt") / "arch.ckpt";
  SaveCheckpoint(Checkpoint::FromModel(model, PrimitiveDictionary()), path);
  try {
    LoadCheckpoint(path, ToyConfig(2, 2, 32, 32));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("hidden"), std::string::npos) << e.what();
  }
  EXPECT_NO_THROW(LoadCheckpoint(path, ToyConfig(2, 2, 16, 32)));
  EXPECT_THROW(LoadCheckpoint(testing::ScratchDir("ckpt") / "missing.ckpt"), Error);
}

TEST(Checkpoint, EmbedsDictionaryParameters) {
  ModelConfig cfg = ToyConfig(1, 1, 8, 16);
  cfg.vocab_size = 12 + 4;
  TransformerModel<float> model(cfg, 3);
  const Checkpoint c = Checkpoint::FromModel(model, PrimitiveDictionary(12, 0.08));
  const Checkpoint back = DeserializeCheckpoint(SerializeCheckpoint(c));
  EXPECT_EQ(back.dictionary(), PrimitiveDictionary(12, 0.08));
  EXPECT_EQ(back.vocabulary().size(), 16);
}

}  // namespace
}  // namespace primsketch

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

#include "primsketch/checkpoint.h"

#include <nlohmann/json.hpp>

#include "primsketch/binary_io.h"
#include "primsketch/error.h"

namespace primsketch {
namespace {

using json = nlohmann::json;

constexpr char kCheckpointMagic[4] = {'P', 'S', 'K', 'M'};

json ConfigToJson(const ModelConfig& c) {
  return {{"layers", c.layers},
          {"heads", c.heads},
          {"hidden", c.hidden},
          {"max_seq_len", c.max_seq_len},
          {"vocab_size", c.vocab_size},
          {"num_classes", c.num_classes},
          {"mlp_multiplier", c.mlp_multiplier},
          {"tie_lm_head", c.tie_lm_head},
          {"dropout", c.dropout},
          {"layer_norm_eps", c.layer_norm_eps}};
}

ModelConfig ConfigFromJson(const json& j) {
  ModelConfig c;
  c.layers = j.at("layers").get<int>();
  c.heads = j.at("heads").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.max_seq_len = j.at("max_seq_len").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.num_classes = j.at("num_classes").get<int>();
  c.mlp_multiplier = j.at("mlp_multiplier").get<int>();
  c.tie_lm_head = j.at("tie_lm_head").get<bool>();
  c.dropout = j.at("dropout").get<double>();
  c.layer_norm_eps = j.at("layer_norm_eps").get<double>();
  return c;
}

// Rebuilds the parameter struct from the config's shapes, then fills it in
// Named() order.
ModelParameters<double> EmptyParameters(const ModelConfig& config) {
  return InitializeParameters<double>(config, 0);
}

}  // namespace

std::string_view PrecisionName(Precision p) {
  return p == Precision::kFloat32 ? "float32" : "float64";
}

void RequireSameArchitecture(const ModelConfig& stored,
                             const ModelConfig& expected) {
  auto check = [](const char* field, auto a, auto b) {
    if (a != b) {
      throw Error(ErrorKind::kShapeMismatch,
                  std::string("checkpoint config mismatch on ") + field +
                      ": stored " + std::to_string(a) + ", expected " +
                      std::to_string(b));
    }
  };
  check("layers", stored.layers, expected.layers);
  check("heads", stored.heads, expected.heads);
  check("hidden", stored.hidden, expected.hidden);
  check("max_seq_len", stored.max_seq_len, expected.max_seq_len);
  check("vocab_size", stored.vocab_size, expected.vocab_size);
  check("num_classes", stored.num_classes, expected.num_classes);
  check("mlp_multiplier", stored.mlp_multiplier, expected.mlp_multiplier);
  check("tie_lm_head", static_cast<int>(stored.tie_lm_head),
        static_cast<int>(expected.tie_lm_head));
}

std::string SerializeCheckpoint(const Checkpoint& ckpt) {
  CheckParameterShapes(ckpt.params, ckpt.config);
  const auto named = ckpt.params.Named();
  json tensors = json::array();
  for (const auto& [name, t] : named) {
    tensors.push_back({{"name", name}, {"shape", t.shape()}});
  }
  json state = {{"task", ckpt.state.task},
                {"epoch", ckpt.state.epoch},
                {"best_epoch", ckpt.state.best_epoch},
                {"best_metric", ckpt.state.best_metric},
                {"has_optimizer", ckpt.state.optimizer.has_value()}};
  if (ckpt.state.optimizer) {
    const AdamState& a = *ckpt.state.optimizer;
    state["optimizer"] = {{"step", a.step},
                          {"learning_rate", a.config.learning_rate},
                          {"beta1", a.config.beta1},
                          {"beta2", a.config.beta2},
                          {"epsilon", a.config.epsilon}};
  }
  json header = {{"format_version", kCheckpointFormatVersion},
                 {"config", ConfigToJson(ckpt.config)},
                 {"dictionary",
                  {{"orientations", ckpt.orientations},
                   {"primitive_length", ckpt.primitive_length}}},
                 {"precision", PrecisionName(ckpt.precision)},
                 {"class_names", ckpt.class_names},
                 {"state", state},
                 {"tensors", tensors}};
  const std::string header_text = header.dump();

  ByteWriter w;
  w.PutBytes(std::string_view(kCheckpointMagic, 4));
  w.Put<std::uint32_t>(kCheckpointFormatVersion);
  w.Put<std::uint64_t>(header_text.size());
  w.PutBytes(header_text);
  for (const auto& [name, t] : named) {
    if (ckpt.precision == Precision::kFloat32) {
      for (double v : t.values()) w.Put<float>(static_cast<float>(v));
    } else {
      w.PutSpan<double>(t.values());
    }
  }
  if (ckpt.state.optimizer) {
    const AdamState& a = *ckpt.state.optimizer;
    if (a.first_moment.size() != named.size() ||
        a.second_moment.size() != named.size()) {
      throw Error(ErrorKind::kShapeMismatch,
                  "optimizer state does not cover every parameter tensor");
    }
    for (std::size_t i = 0; i < named.size(); ++i) {
      w.PutSpan<double>(a.first_moment[i]);
      w.PutSpan<double>(a.second_moment[i]);
    }
  }
  return w.Take();
}

Checkpoint DeserializeCheckpoint(std::string_view bytes) {
  ByteReader r(bytes, "checkpoint");
  if (r.GetBytes(4) != std::string_view(kCheckpointMagic, 4)) {
    throw Error(ErrorKind::kFormat, "checkpoint: bad magic bytes");
  }
  const auto version = r.Get<std::uint32_t>();
  if (version != kCheckpointFormatVersion) {
    throw Error(ErrorKind::kFormat,
                "checkpoint: format version " + std::to_string(version) +
                    " detected, expected " +
                    std::to_string(kCheckpointFormatVersion));
  }
  const auto header_len = r.Get<std::uint64_t>();
  if (header_len > r.remaining()) {
    throw Error(ErrorKind::kFormat, "checkpoint: header length exceeds file");
  }
  json header;
  Checkpoint ckpt;
  try {
    header = json::parse(r.GetBytes(header_len));
    ckpt.config = ConfigFromJson(header.at("config"));
    ckpt.orientations = header.at("dictionary").at("orientations").get<int>();
    ckpt.primitive_length =
        header.at("dictionary").at("primitive_length").get<double>();
    const std::string precision = header.at("precision").get<std::string>();
    if (precision == "float32") {
      ckpt.precision = Precision::kFloat32;
    } else if (precision == "float64") {
      ckpt.precision = Precision::kFloat64;
    } else {
      throw Error(ErrorKind::kFormat, "checkpoint: unknown precision " + precision);
    }
    ckpt.class_names = header.at("class_names").get<std::vector<std::string>>();
    const json& state = header.at("state");
    ckpt.state.task = state.at("task").get<std::string>();
    ckpt.state.epoch = state.at("epoch").get<std::int64_t>();
    ckpt.state.best_epoch = state.at("best_epoch").get<std::int64_t>();
    ckpt.state.best_metric = state.at("best_metric").get<double>();
    if (state.at("has_optimizer").get<bool>()) {
      AdamState a;
      const json& o = state.at("optimizer");
      a.step = o.at("step").get<std::int64_t>();
      a.config.learning_rate = o.at("learning_rate").get<double>();
      a.config.beta1 = o.at("beta1").get<double>();
      a.config.beta2 = o.at("beta2").get<double>();
      a.config.epsilon = o.at("epsilon").get<double>();
      ckpt.state.optimizer = std::move(a);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("checkpoint header: ") + e.what());
  }
  try {
    ckpt.config.Validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::kFormat, std::string("checkpoint: ") + e.what());
  }
  if (ckpt.config.vocab_size != ckpt.orientations + 4) {
    throw Error(ErrorKind::kFormat,
                "checkpoint: vocab_size disagrees with dictionary size");
  }

  ckpt.params = EmptyParameters(ckpt.config);
  auto named = ckpt.params.Named();
  const json& manifest = header.at("tensors");
  if (manifest.size() != named.size()) {
    throw Error(ErrorKind::kFormat,
                "checkpoint: manifest lists " + std::to_string(manifest.size()) +
                    " tensors, config implies " + std::to_string(named.size()));
  }
  for (std::size_t i = 0; i < named.size(); ++i) {
    auto& [name, t] = named[i];
    if (manifest[i].at("name").get<std::string>() != name ||
        manifest[i].at("shape").get<Shape>() != t.shape()) {
      throw Error(ErrorKind::kFormat,
                  "checkpoint: manifest entry " + std::to_string(i) +
                      " does not match tensor " + name);
    }
    auto values = t.values();
    if (ckpt.precision == Precision::kFloat32) {
      for (double& v : values) v = static_cast<double>(r.Get<float>());
    } else {
      r.GetSpan<double>(values);
    }
  }
  if (ckpt.state.optimizer) {
    AdamState& a = *ckpt.state.optimizer;
    for (const auto& [name, t] : named) {
      a.first_moment.emplace_back(t.numel());
      r.GetSpan<double>(std::span<double>(a.first_moment.back()));
      a.second_moment.emplace_back(t.numel());
      r.GetSpan<double>(std::span<double>(a.second_moment.back()));
    }
  }
  if (!r.done()) {
    throw Error(ErrorKind::kFormat, "checkpoint: trailing bytes after payload");
  }
  return ckpt;
}

void SaveCheckpoint(const Checkpoint& checkpoint,
                    const std::filesystem::path& path) {
  WriteFileBytes(path, SerializeCheckpoint(checkpoint));
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  return DeserializeCheckpoint(ReadFileBytes(path));
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path,
                          const ModelConfig& expected) {
  Checkpoint ckpt = LoadCheckpoint(path);
  RequireSameArchitecture(ckpt.config, expected);
  return ckpt;
}

}  // namespace primsketch

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

#ifndef PRIMSKETCH_TOOLS_COMMANDS_H_
#define PRIMSKETCH_TOOLS_COMMANDS_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "primsketch/model.h"
#include "primsketch/primitives.h"
#include "primsketch/training.h"

namespace primsketch::cli {

// Missing or inconsistent command-line input; maps to the usage exit code.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flags shared by every subcommand; each one is also a config-file key.
struct CommonOptions {
  std::uint64_t seed = 0;  // resolved before dispatch
  std::vector<std::string> classes;
  int k_primitives = PrimitiveDictionary::kDefaultOrientations;
  double prim_length = PrimitiveDictionary::kDefaultLength;
  int max_seq_len = 512;
  int layers = 4;
  int heads = 4;
  int hidden = 128;
  double dropout = 0.1;
  int epochs = 10;
  int batch = 16;
  double lr = 3e-4;
  int patience = 3;
  std::int64_t max_steps = 0;
  double temperature = 1.0;
  int num_samples = 1;
  std::string precision = "float";
  std::filesystem::path out;
  std::string effective_config;  // key = value text echoed into --out

  PrimitiveDictionary Dictionary() const;
  ModelConfig Model() const;
  TrainPlan Plan() const;
  bool Double() const { return precision == "double"; }
};

struct IngestOptions {
  std::vector<std::filesystem::path> inputs;
  int synthetic_per_class = 0;
  double validation_fraction = 0.1;
};

struct CorpusOptions {
  std::filesystem::path corpus;
  std::filesystem::path validation_corpus;
};

struct FinetuneOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path corpus;
  std::filesystem::path validation_corpus;
  std::string task = "completion";
  std::string class_name;
  bool freeze_backbone = false;
};

struct SampleOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path models;  // directory of <class>.ckpt
  std::string class_name;
  std::filesystem::path prefix;  // complete only
  std::int64_t max_new_tokens = 0;
  std::optional<int> top_k;
  std::optional<double> top_p;
};

struct ClassifyOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path input;
  int top_k = 5;
};

struct EvalOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path corpus;
  std::vector<std::string> generators;  // class=path
};

struct AblateOptions {
  std::string axis = "train_size";
  std::vector<int> values;
  std::vector<std::string> shapes;  // L-A-H
  std::filesystem::path corpus;
  std::filesystem::path test_corpus;
  std::filesystem::path pretrained;
  int base_class_count = 0;
  int base_train_size = 0;
};

struct ServeOptions {
  std::vector<std::string> generators;  // class=path
  std::filesystem::path classifier;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::vector<std::string> cors;
};

// Each returns a process exit code; failures surface as exceptions.
int RunIngest(const CommonOptions& c, const IngestOptions& o, std::ostream& out);
int RunTokenizeStats(const CommonOptions& c, const CorpusOptions& o, std::ostream& out);
int RunPretrain(const CommonOptions& c, const CorpusOptions& o, std::ostream& out);
int RunFinetune(const CommonOptions& c, const FinetuneOptions& o, std::ostream& out);
int RunGenerate(const CommonOptions& c, const SampleOptions& o, std::ostream& out);
int RunComplete(const CommonOptions& c, const SampleOptions& o, std::ostream& out);
int RunClassify(const CommonOptions& c, const ClassifyOptions& o, std::ostream& out);
int RunEval(const CommonOptions& c, const EvalOptions& o, std::ostream& out);
int RunAblate(const CommonOptions& c, const AblateOptions& o, std::ostream& out);
int RunServe(const CommonOptions& c, const ServeOptions& o, std::ostream& out);

}  // namespace primsketch::cli

#endif  // PRIMSKETCH_TOOLS_COMMANDS_H_

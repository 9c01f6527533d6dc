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

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.h"
#include "fixtures.h"
#include "primsketch/primitives.h"
#include "primsketch/sampling.h"
#include "primsketch/stroke_data.h"
#include "primsketch/tokenizer.h"

namespace primsketch {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun CliArgs(const std::vector<std::string>& args) {
  std::vector<std::string> owned{"primsketch"};
  owned.insert(owned.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : owned) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.code = cli::RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

CliRun Cli(std::initializer_list<std::string> args) { return CliArgs(args); }

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> Lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

const std::vector<std::string> kTiny{"--max-seq-len", "128", "--layers", "1", "--heads", "2",
                                     "--hidden",      "16",  "--batch",  "8", "--lr",    "3e-3"};

// One synthetic corpus and one small pre-trained + fine-tuned pair, shared by
// every test in the suite.
class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = testing::ScratchDir("cli");
    fs::current_path(dir_);
    ASSERT_EQ(Cli({"ingest", "--synthetic", "16", "--classes", "circle,square,star", "--seed",
                   "5", "--out", "data"})
                  .code,
              0);
    std::vector<std::string> args{"pretrain", "--corpus", "data/train.corpus", "--epochs", "2",
                                  "--seed",   "1",        "--out",             "pre"};
    args.insert(args.end(), kTiny.begin(), kTiny.end());
    ASSERT_EQ(CliArgs(args).code, 0);
    ASSERT_EQ(Cli({"finetune", "--checkpoint", "pre/model.ckpt", "--corpus", "data/train.corpus",
                   "--class", "star", "--epochs", "1", "--batch", "8", "--seed", "2", "--out",
                   "star"})
                  .code,
              0);
  }

  static inline fs::path dir_;
};

TEST(CliUsage, ExitCodesAndOffendingFlag) {
  EXPECT_EQ(Cli({}).code, cli::kExitUsage);
  EXPECT_EQ(Cli({"--help"}).code, cli::kExitOk);

  const CliRun unknown = Cli({"generate", "--bogus-flag", "1"});
  EXPECT_EQ(unknown.code, cli::kExitUsage);
  EXPECT_NE(unknown.err.find("--bogus-flag"), std::string::npos) << unknown.err;

  const CliRun missing = Cli({"pretrain", "--out", "unused"});
  EXPECT_EQ(missing.code, cli::kExitUsage);
  EXPECT_NE(missing.err.find("--corpus"), std::string::npos) << missing.err;

  const CliRun absent = Cli({"pretrain", "--corpus", "/no/such/corpus", "--out", "unused"});
  EXPECT_EQ(absent.code, cli::kExitUsage);
  EXPECT_NE(absent.err.find("--corpus"), std::string::npos) << absent.err;

  const CliRun bad_value = Cli({"generate", "--temperature", "-1"});
  EXPECT_EQ(bad_value.code, cli::kExitUsage);
  EXPECT_NE(bad_value.err.find("--temperature"), std::string::npos) << bad_value.err;
}

TEST_F(CliPipeline, CorruptInputIsRuntimeError) {
  std::ofstream("corrupt.corpus") << "not a corpus";
  const CliRun r = Cli({"tokenize-stats", "--corpus", "corrupt.corpus"});
  EXPECT_EQ(r.code, cli::kExitRuntime) << r.err;
  EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST_F(CliPipeline, IngestWritesSplitsAndReport) {
  const SketchCorpus train = LoadCorpus("data/train.corpus");
  const SketchCorpus val = LoadCorpus("data/validation.corpus");
  EXPECT_EQ(train.sketches.size() + val.sketches.size(), 48u);
  EXPECT_EQ(train.class_names, (std::vector<std::string>{"circle", "square", "star"}));
  const json report = json::parse(Slurp("data/ingest.json"));
  EXPECT_EQ(report["seed"], 5);
  EXPECT_EQ(report["train"], train.sketches.size());
  EXPECT_EQ(report["per_class"]["star"], 16);
}

TEST_F(CliPipeline, TokenizeStatsMatchesDirectCount) {
  const CliRun r = Cli({"tokenize-stats", "--corpus", "data/train.corpus", "--max-seq-len", "80",
                     "--out", "stats"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("truncation rate at max-seq-len 80"), std::string::npos) << r.out;

  const SketchCorpus corpus = LoadCorpus("data/train.corpus");
  const PrimitiveDictionary dict;
  std::int64_t over = 0;
  for (const auto& s : corpus.sketches) over += EncodedLength(Abstract(Normalize(s), dict)) > 80;
  const json report = json::parse(Slurp("stats/tokenize_stats.json"));
  EXPECT_EQ(report["truncated"], over);
  EXPECT_DOUBLE_EQ(report["truncation_rate"].get<double>(),
                   double(over) / double(corpus.sketches.size()));
  std::int64_t total = 0;
  for (const auto& bin : report["histogram"]) total += bin["count"].get<std::int64_t>();
  EXPECT_EQ(total, static_cast<std::int64_t>(corpus.sketches.size()));
  EXPECT_EQ(report["histogram"].back()["count"], over);
}

TEST_F(CliPipeline, TrainingWritesMetricsCheckpointAndConfig) {
  EXPECT_TRUE(fs::exists("pre/model.ckpt"));
  const auto lines = Lines(Slurp("pre/metrics.jsonl"));
  ASSERT_EQ(lines.size(), 4u);  // train + validation per epoch
  for (const auto& l : lines) EXPECT_TRUE(json::parse(l).contains("loss"));
  const std::string config = Slurp("pre/effective_config.ini");
  EXPECT_NE(config.find("seed=1\n"), std::string::npos) << config;
  EXPECT_NE(config.find("pretrain.corpus=\"data/train.corpus\""), std::string::npos);
  EXPECT_EQ(config.find("generate."), std::string::npos);
}

TEST_F(CliPipeline, EveryFlagHasAConfigKey) {
  const std::string config = "\n" + Slurp("pre/effective_config.ini");
  for (const char* key : {"seed=", "k-primitives=", "prim-length=", "max-seq-len=", "layers=",
                          "heads=", "hidden=", "epochs=", "batch=", "lr=", "temperature=",
                          "num-samples=", "out="}) {
    EXPECT_NE(config.find(std::string("\n") + key), std::string::npos) << key;
  }
  const std::string ingest = Slurp("data/effective_config.ini");
  EXPECT_NE(ingest.find("classes=[\"circle\", \"square\", \"star\"]"), std::string::npos) << ingest;
}

TEST_F(CliPipeline, FlagsOverrideConfigAndEchoReproduces) {
  std::ofstream("base.ini") << "seed = 3\nepochs = 1\nmax-seq-len = 128\nlayers = 1\nheads = 2\n"
                               "hidden = 16\nbatch = 8\n[pretrain]\ncorpus = \"data/train.corpus\"\n";
  ASSERT_EQ(Cli({"--config", "base.ini", "pretrain", "--epochs", "2", "--out", "cfg"}).code, 0);
  EXPECT_EQ(Lines(Slurp("cfg/metrics.jsonl")).size(), 4u);
  ASSERT_EQ(Cli({"--config", "cfg/effective_config.ini", "pretrain", "--out", "cfg2"}).code, 0);
  EXPECT_EQ(Slurp("cfg/model.ckpt"), Slurp("cfg2/model.ckpt"));
}

TEST_F(CliPipeline, SeededGenerateIsReproducible) {
  for (const char* out : {"gen_a", "gen_b"}) {
    ASSERT_EQ(Cli({"generate", "--checkpoint", "star/model.ckpt", "--class", "star",
                   "--num-samples", "5", "--temperature", "1.2", "--seed", "7", "--out", out})
                  .code,
              0);
  }
  for (int i = 0; i < 5; ++i) {
    const std::string name = "sample_00" + std::to_string(i) + ".svg";
    const std::string a = Slurp(fs::path("gen_a") / name);
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, Slurp(fs::path("gen_b") / name)) << name;
  }
  ASSERT_EQ(Cli({"generate", "--checkpoint", "star/model.ckpt", "--num-samples", "5",
                 "--temperature", "1.2", "--seed", "8", "--out", "gen_c"})
                .code,
            0);
  EXPECT_NE(Slurp("gen_a/generation.json"), Slurp("gen_c/generation.json"));
}

TEST_F(CliPipeline, UnseededRunReportsDrawnSeed) {
  const CliRun r = Cli({"generate", "--models", ".", "--class", "missing"});
  EXPECT_EQ(r.code, cli::kExitRuntime);
  EXPECT_NE(r.err.find("seed: "), std::string::npos);
  EXPECT_NE(r.err.find("(drawn)"), std::string::npos);
}

TEST_F(CliPipeline, GeneratorClassMismatchAndMissingSourceFail) {
  EXPECT_EQ(Cli({"generate", "--checkpoint", "star/model.ckpt", "--class", "circle"}).code,
            cli::kExitRuntime);
  EXPECT_EQ(Cli({"generate", "--class", "star"}).code, cli::kExitUsage);
}

TEST_F(CliPipeline, CompleteKeepsPrefixAndClassifyRanks) {
  std::ofstream("prefix.json") << R"({"strokes": [[0.1, 0, 0], [0, 0.1, 0], [-0.1, 0, 1]]})";
  const CliRun c = Cli({"complete", "--checkpoint", "star/model.ckpt", "--prefix", "prefix.json",
                     "--num-samples", "2", "--seed", "4"});
  ASSERT_EQ(c.code, 0) << c.err;
  const json g = json::parse(c.out);
  const std::size_t n = g["prefix_length"].get<std::size_t>();
  const std::vector<int> prefix = PrefixTokens(Sketch{{{0.1, 0, 0}, {0, 0.1, 0}, {-0.1, 0, 1}}, {}},
                                               PrimitiveDictionary());
  ASSERT_EQ(n, prefix.size());
  for (const auto& seq : g["sequences"]) {
    const auto tokens = seq["tokens"].get<std::vector<int>>();
    EXPECT_TRUE(std::equal(prefix.begin(), prefix.end(), tokens.begin()));
  }
  EXPECT_EQ(g["svg"].size(), 2u);

  ASSERT_EQ(Cli({"finetune", "--checkpoint", "pre/model.ckpt", "--corpus", "data/train.corpus",
                 "--task", "classify", "--epochs", "1", "--batch", "8", "--seed", "3", "--out",
                 "cls"})
                .code,
            0);
  const CliRun k = Cli({"classify", "--checkpoint", "cls/model.ckpt", "--input", "prefix.json",
                     "--top-k", "2"});
  ASSERT_EQ(k.code, 0) << k.err;
  const json ranked = json::parse(k.out)["top_k"];
  ASSERT_EQ(ranked.size(), 2u);
  EXPECT_GE(ranked[0]["probability"].get<double>(), ranked[1]["probability"].get<double>());

  const CliRun e = Cli({"eval", "--checkpoint", "cls/model.ckpt", "--corpus",
                     "data/validation.corpus", "--out", "eval"});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_TRUE(json::parse(Slurp("eval/eval.json")).contains("top1"));
  EXPECT_EQ(Cli({"classify", "--checkpoint", "pre/model.ckpt", "--input", "prefix.json"}).code,
            cli::kExitRuntime);
}

TEST_F(CliPipeline, AblateWritesTableAndRejectsBadGrid) {
  std::vector<std::string> args{"ablate",        "--axis",       "train_size",
                                "--values",      "4,8",          "--corpus",
                                "data/train.corpus", "--test-corpus", "data/validation.corpus",
                                "--epochs",      "1",            "--seed",
                                "1",             "--out",        "abl"};
  args.insert(args.end(), kTiny.begin(), kTiny.end());
  const CliRun r = CliArgs(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(Lines(Slurp("abl/ablation.csv")).size(), 3u);
  EXPECT_EQ(Cli({"ablate", "--axis", "network_size", "--shapes", "2x2", "--corpus",
                 "data/train.corpus", "--test-corpus", "data/validation.corpus"})
                .code,
            cli::kExitUsage);
}

TEST_F(CliPipeline, PresetsParseAndFlagsOverrideThem) {
  const std::map<std::string, std::string> layers{
      {"desk-5class", "layers=4"}, {"paper-7class", "layers=8"}, {"paper-100class", "layers=8"}};
  for (const auto& [name, want] : layers) {
    const fs::path preset = fs::path(PRIMSKETCH_CONFIG_DIR) / (name + ".ini");
    const CliRun r = Cli({"--config", preset.string(), "--classes", "circle,star", "--max-seq-len",
                          "64", "tokenize-stats", "--corpus", "data/train.corpus", "--out",
                          "preset_" + name});
    ASSERT_EQ(r.code, 0) << name << ": " << r.err;
    const std::string echo = Slurp(fs::path("preset_" + name) / "effective_config.ini");
    EXPECT_NE(echo.find(want), std::string::npos) << name;
    EXPECT_NE(echo.find("max-seq-len=64"), std::string::npos) << name;
    EXPECT_NE(echo.find("classes=[\"circle\", \"star\"]"), std::string::npos) << echo;
  }
  // Without the override the 100-class list is enforced against the corpus.
  const fs::path big = fs::path(PRIMSKETCH_CONFIG_DIR) / "paper-100class.ini";
  const CliRun r = Cli({"--config", big.string(), "tokenize-stats", "--corpus", "data/train.corpus"});
  EXPECT_EQ(r.code, cli::kExitRuntime);
  EXPECT_NE(r.err.find("aircraft carrier"), std::string::npos) << r.err;
}

TEST(CliUsage, ServeNeedsACheckpoint) {
  const CliRun r = Cli({"serve", "--port", "1"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("--generator"), std::string::npos);
}

}  // namespace
}  // namespace primsketch

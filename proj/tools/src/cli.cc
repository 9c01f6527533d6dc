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

#include "cli.h"

#include <cstdint>
#include <exception>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "commands.h"
#include "primsketch/error.h"

namespace primsketch::cli {
namespace {

// Seeds stay below 2^53 so they survive a round trip through JSON numbers.
std::uint64_t FreshSeed() {
  std::random_device rd;
  const std::uint64_t hi = rd();
  return ((hi << 32) ^ rd()) & ((std::uint64_t{1} << 53) - 1);
}

void AddCommonOptions(CLI::App& app, CommonOptions& c, std::optional<std::uint64_t>& seed) {
  app.add_option("--seed", seed, "Random seed; drawn and reported when omitted");
  app.add_option("--classes", c.classes, "Comma-separated class names")->delimiter(',');
  app.add_option("--k-primitives", c.k_primitives, "Primitive orientations K")
      ->check(CLI::Range(4, 4096));
  app.add_option("--prim-length", c.prim_length, "Primitive length (normalized units)")
      ->check(CLI::PositiveNumber);
  app.add_option("--max-seq-len", c.max_seq_len, "Context window in tokens")
      ->check(CLI::Range(3, 1 << 20));
  app.add_option("--layers", c.layers, "Transformer blocks")->check(CLI::PositiveNumber);
  app.add_option("--heads", c.heads, "Attention heads")->check(CLI::PositiveNumber);
  app.add_option("--hidden", c.hidden, "Hidden width")->check(CLI::PositiveNumber);
  app.add_option("--dropout", c.dropout, "Dropout probability")->check(CLI::Range(0.0, 0.99));
  app.add_option("--epochs", c.epochs, "Training epochs")->check(CLI::NonNegativeNumber);
  app.add_option("--batch", c.batch, "Batch size")->check(CLI::PositiveNumber);
  app.add_option("--lr", c.lr, "Peak learning rate")->check(CLI::PositiveNumber);
  app.add_option("--patience", c.patience, "Early-stopping patience in epochs")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--max-steps", c.max_steps, "Optimizer step cap (0: none)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--temperature", c.temperature, "Sampling temperature")
      ->check(CLI::PositiveNumber);
  app.add_option("--num-samples", c.num_samples, "Samples per request or class")
      ->check(CLI::PositiveNumber);
  app.add_option("--precision", c.precision, "Training precision")
      ->check(CLI::IsMember({"float", "double"}));
  app.add_option("--out", c.out, "Output directory");
}

// Keeps root keys and those of the active subcommand; drops unset values.
std::string EchoConfig(const std::string& text, const std::string& active) {
  std::istringstream in(text);
  std::string out;
  for (std::string line; std::getline(in, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (value == "\"\"" || value == "\"{}\"") continue;
    const auto dot = key.find('.');
    if (dot != std::string::npos && key.substr(0, dot) != active) continue;
    out += line + '\n';
  }
  return out;
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sketch generation and recognition with primitive tokens", "primsketch"};
  app.set_config("--config", "", "Key/value config file; flags override its values");
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1, 1);
  app.fallthrough();

  CommonOptions common;
  std::optional<std::uint64_t> seed;
  AddCommonOptions(app, common, seed);

  IngestOptions ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse QuickDraw ndjson (or synthesize) into corpus files");
  ingest_cmd->add_option("--input", ingest.inputs, "ndjson files or directories of them")
      ->check(CLI::ExistingPath);
  ingest_cmd->add_option("--synthetic", ingest.synthetic_per_class,
                         "Synthesize this many sketches per class instead")
      ->check(CLI::NonNegativeNumber);
  ingest_cmd->add_option("--validation-fraction", ingest.validation_fraction,
                         "Share held out as validation")
      ->check(CLI::Range(0.0, 0.9));

  CorpusOptions stats;
  auto* stats_cmd = app.add_subcommand("tokenize-stats", "Sequence-length histogram and truncation rate");
  stats_cmd->add_option("--corpus", stats.corpus, "Corpus file")->check(CLI::ExistingFile);

  CorpusOptions pretrain;
  auto* pretrain_cmd = app.add_subcommand("pretrain", "Next-token pre-training on a corpus");
  pretrain_cmd->add_option("--corpus", pretrain.corpus, "Training corpus file")
      ->check(CLI::ExistingFile);
  pretrain_cmd->add_option("--validation-corpus", pretrain.validation_corpus,
                           "Validation corpus (default: split from --corpus)")
      ->check(CLI::ExistingFile);

  FinetuneOptions finetune;
  auto* finetune_cmd = app.add_subcommand("finetune", "Class completion or classification fine-tuning");
  finetune_cmd->add_option("--checkpoint", finetune.checkpoint, "Starting checkpoint")
      ->check(CLI::ExistingFile);
  finetune_cmd->add_option("--corpus", finetune.corpus, "Training corpus file")
      ->check(CLI::ExistingFile);
  finetune_cmd->add_option("--validation-corpus", finetune.validation_corpus, "Validation corpus")
      ->check(CLI::ExistingFile);
  finetune_cmd->add_option("--task", finetune.task, "completion or classify")
      ->check(CLI::IsMember({"completion", "classify"}));
  finetune_cmd->add_option("--class", finetune.class_name, "Class to specialize (completion)");
  finetune_cmd->add_flag("--freeze-backbone", finetune.freeze_backbone,
                         "Train only the classification head");

  SampleOptions generate;
  SampleOptions complete;
  auto add_sample_options = [](CLI::App* cmd, SampleOptions& o) {
    cmd->add_option("--checkpoint", o.checkpoint, "Generator checkpoint")->check(CLI::ExistingFile);
    cmd->add_option("--models", o.models, "Directory holding <class>.ckpt")
        ->check(CLI::ExistingDirectory);
    cmd->add_option("--class", o.class_name, "Class to draw");
    cmd->add_option("--max-new-tokens", o.max_new_tokens, "Token budget (0: context window)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--top-k", o.top_k, "Restrict sampling to the k most likely tokens")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--top-p", o.top_p, "Nucleus sampling mass")->check(CLI::Range(0.0, 1.0));
  };
  auto* generate_cmd = app.add_subcommand("generate", "Unconditional sampling to SVG");
  add_sample_options(generate_cmd, generate);
  auto* complete_cmd = app.add_subcommand("complete", "Continue a partial drawing");
  add_sample_options(complete_cmd, complete);
  complete_cmd->add_option("--prefix", complete.prefix, "JSON {\"strokes\": [[dx, dy, pen], ...]}")
      ->check(CLI::ExistingFile);

  ClassifyOptions classify;
  auto* classify_cmd = app.add_subcommand("classify", "Top-k classes for one drawing");
  classify_cmd->add_option("--checkpoint", classify.checkpoint, "Classifier checkpoint")
      ->check(CLI::ExistingFile);
  classify_cmd->add_option("--input", classify.input, "JSON {\"strokes\": [[dx, dy, pen], ...]}")
      ->check(CLI::ExistingFile);
  classify_cmd->add_option("--top-k", classify.top_k, "Classes to report")
      ->check(CLI::PositiveNumber);

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Classifier accuracy or generator recognizability");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Classifier checkpoint")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--corpus", eval.corpus, "Labelled test corpus")->check(CLI::ExistingFile);
  eval_cmd->add_option("--generator", eval.generators,
                       "class=checkpoint; repeat to score generated sketches");

  AblateOptions ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "Classification accuracy along one ablation axis");
  ablate_cmd->add_option("--axis", ablate.axis, "class_count, train_size or network_size")
      ->check(CLI::IsMember({"class_count", "train_size", "network_size", "class-count",
                             "train-size", "network-size"}));
  ablate_cmd->add_option("--values", ablate.values, "Grid for class_count/train_size")
      ->delimiter(',');
  ablate_cmd->add_option("--shapes", ablate.shapes, "Grid for network_size as L-A-H")
      ->delimiter(',');
  ablate_cmd->add_option("--corpus", ablate.corpus, "Training corpus")
      ->check(CLI::ExistingFile);
  ablate_cmd->add_option("--test-corpus", ablate.test_corpus, "Test corpus")
      ->check(CLI::ExistingFile);
  ablate_cmd->add_option("--pretrained", ablate.pretrained, "Backbone to fine-tune from")
      ->check(CLI::ExistingFile);
  ablate_cmd->add_option("--base-class-count", ablate.base_class_count,
                         "Classes on the other axes (0: all)")
      ->check(CLI::NonNegativeNumber);
  ablate_cmd->add_option("--base-train-size", ablate.base_train_size,
                         "Samples per class on the other axes (0: all)")
      ->check(CLI::NonNegativeNumber);

  ServeOptions serve;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP JSON inference endpoints under /v1");
  serve_cmd->add_option("--generator", serve.generators, "class=checkpoint; repeatable");
  serve_cmd->add_option("--classifier", serve.classifier, "Classifier checkpoint");
  serve_cmd->add_option("--host", serve.host, "Bind address");
  serve_cmd->add_option("--port", serve.port, "Port")->check(CLI::Range(1, 65535));
  serve_cmd->add_option("--cors", serve.cors, "Allowed origins (* for any)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const bool drew_seed = !seed.has_value();
  common.seed = seed.value_or(FreshSeed());
  const std::string active = app.get_subcommands().front()->get_name();
  common.effective_config = EchoConfig(app.config_to_str(true, false), active);
  if (drew_seed) common.effective_config += "seed=" + std::to_string(common.seed) + "\n";
  err << "seed: " << common.seed << (drew_seed ? " (drawn)" : "") << '\n';

  try {
    if (ingest_cmd->parsed()) return RunIngest(common, ingest, out);
    if (stats_cmd->parsed()) return RunTokenizeStats(common, stats, out);
    if (pretrain_cmd->parsed()) return RunPretrain(common, pretrain, out);
    if (finetune_cmd->parsed()) return RunFinetune(common, finetune, out);
    if (generate_cmd->parsed()) return RunGenerate(common, generate, out);
    if (complete_cmd->parsed()) return RunComplete(common, complete, out);
    if (classify_cmd->parsed()) return RunClassify(common, classify, out);
    if (eval_cmd->parsed()) return RunEval(common, eval, out);
    if (ablate_cmd->parsed()) return RunAblate(common, ablate, out);
    if (serve_cmd->parsed()) return RunServe(common, serve, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\nRun with --help for more information.\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error (" << ErrorKindName(e.kind()) << "): " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace primsketch::cli

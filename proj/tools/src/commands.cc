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

#include "commands.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "primsketch/checkpoint.h"
#include "primsketch/error.h"
#include "primsketch/evaluation.h"
#include "primsketch/render.h"
#include "primsketch/sampling.h"
#include "primsketch/service.h"
#include "primsketch/stroke_data.h"
#include "primsketch/tokenizer.h"

namespace primsketch::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void Require(const std::filesystem::path& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw Error(ErrorKind::kIo, "cannot write " + path.string());
}

// Creates --out and echoes the effective configuration into it.
fs::path PrepareOut(const CommonOptions& c, const char* command) {
  if (c.out.empty()) throw UsageError(std::string("--out is required for ") + command);
  fs::create_directories(c.out);
  WriteText(c.out / "effective_config.ini", c.effective_config);
  return c.out;
}

SketchCorpus LoadFiltered(const fs::path& path, const std::vector<std::string>& classes) {
  SketchCorpus corpus = LoadCorpus(path);
  if (classes.empty()) return corpus;
  for (const auto& name : classes) {
    if (corpus.ClassIndex(name) < 0) {
      throw Error(ErrorKind::kNotFound,
                  "class '" + name + "' from --classes is not in " + path.string());
    }
  }
  return FilterClasses(corpus, classes);
}

std::pair<std::string, fs::path> ParseBinding(const std::string& flag, const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
    throw UsageError(flag + " expects class=checkpoint, got '" + text + "'");
  }
  return {text.substr(0, eq), fs::path(text.substr(eq + 1))};
}

// {"strokes": [[dx, dy, pen], ...]} or the bare array.
Sketch ReadDrawing(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  const json& arr = doc.is_object() && doc.contains("strokes") ? doc["strokes"] : doc;
  if (!arr.is_array()) {
    throw Error(ErrorKind::kParse, path.string() + ": expected an array of [dx, dy, pen]");
  }
  Sketch sketch;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json& p = arr[i];
    if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() ||
        !p[2].is_number_integer() || (p[2] != 0 && p[2] != 1)) {
      throw Error(ErrorKind::kParse, path.string() + ": point " + std::to_string(i) +
                                         " is not [dx, dy, 0|1]");
    }
    sketch.points.push_back({p[0].get<double>(), p[1].get<double>(),
                             static_cast<std::uint8_t>(p[2].get<int>())});
  }
  return sketch;
}

Checkpoint ResolveGenerator(const SampleOptions& o) {
  fs::path path = o.checkpoint;
  if (path.empty()) {
    if (o.models.empty() || o.class_name.empty()) {
      throw UsageError("--checkpoint, or --models together with --class, is required");
    }
    path = o.models / (o.class_name + ".ckpt");
    if (!fs::exists(path)) {
      throw Error(ErrorKind::kNotFound, "no checkpoint for class '" + o.class_name + "' at " +
                                            path.string());
    }
  }
  Checkpoint ckpt = LoadCheckpoint(path);
  if (!o.class_name.empty() && !ckpt.class_names.empty() &&
      std::find(ckpt.class_names.begin(), ckpt.class_names.end(), o.class_name) ==
          ckpt.class_names.end()) {
    throw Error(ErrorKind::kInvalidArgument, path.string() + " was fine-tuned for '" +
                                                 ckpt.class_names.front() + "', not '" +
                                                 o.class_name + "'");
  }
  return ckpt;
}

SamplerConfig MakeSampler(const CommonOptions& c, const SampleOptions& o, const Checkpoint& ckpt) {
  SamplerConfig s;
  s.temperature = c.temperature;
  s.max_new_tokens = o.max_new_tokens > 0 ? o.max_new_tokens : ckpt.config.max_seq_len;
  s.seed = c.seed;
  s.num_samples = c.num_samples;
  s.top_k = o.top_k;
  s.top_p = o.top_p;
  s.Validate();
  return s;
}

// Writes sample_NNN.svg files and generation.json under --out, or prints the
// JSON (with inline SVG) when no output directory is given.
int EmitGeneration(const CommonOptions& c, const Checkpoint& ckpt, const GenerationResult& g,
                   const char* command, std::ostream& out) {
  const PrimitiveDictionary dict = ckpt.dictionary();
  const Vocabulary vocab = ckpt.vocabulary();
  json doc = json::parse(g.ToJson());
  std::vector<std::string> svgs;
  for (const auto& seq : g.sequences) {
    svgs.push_back(ToSvg(TokensToPolylines(seq.tokens, dict, vocab, true).polylines));
  }
  if (c.out.empty()) {
    doc["svg"] = svgs;
    out << doc.dump(2) << '\n';
    return 0;
  }
  const fs::path dir = PrepareOut(c, command);
  for (std::size_t i = 0; i < svgs.size(); ++i) {
    std::ostringstream name;
    name << "sample_" << std::setw(3) << std::setfill('0') << i << ".svg";
    WriteText(dir / name.str(), svgs[i]);
    const auto& seq = g.sequences[i];
    out << name.str() << "  tokens=" << seq.tokens.size()
        << "  stop=" << StopReasonName(seq.stop_reason) << "  valid=" << (seq.valid ? "yes" : "no")
        << "  seed=" << seq.seed << '\n';
  }
  WriteText(dir / "generation.json", doc.dump(2) + "\n");
  return 0;
}

template <typename Fn>
TrainOutcome WithPrecision(bool use_double, Fn&& fn) {
  return use_double ? fn(double{}) : fn(float{});
}

void EmitTraining(const fs::path& dir, const TrainOutcome& r, std::ostream& out) {
  SaveCheckpoint(r.checkpoint, dir / "model.ckpt");
  std::ofstream log(dir / "metrics.jsonl", std::ios::binary);
  r.history.WriteMetricsLog(log);
  if (!log) throw Error(ErrorKind::kIo, "cannot write " + (dir / "metrics.jsonl").string());
  const auto& h = r.history;
  for (const auto& e : h.epochs) {
    out << "epoch " << e.epoch << "  train_loss=" << e.train_loss << "  val_loss=" << e.val_loss
        << "  val_top1=" << e.val_top1 << "  steps=" << e.steps << '\n';
  }
  out << "best_epoch=" << h.best_epoch << "  best_metric=" << h.best_metric
      << "  stopped_early=" << (h.stopped_early ? "yes" : "no") << "  truncated=" << h.truncated
      << "  degenerate=" << h.degenerate << '\n'
      << "wrote " << (dir / "model.ckpt").string() << '\n';
}

std::vector<fs::path> ExpandInputs(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> files;
  for (const auto& p : inputs) {
    if (!fs::is_directory(p)) {
      files.push_back(p);
      continue;
    }
    std::vector<fs::path> found;
    for (const auto& entry : fs::directory_iterator(p)) {
      if (entry.is_regular_file() && entry.path().extension() == ".ndjson") {
        found.push_back(entry.path());
      }
    }
    std::sort(found.begin(), found.end());
    files.insert(files.end(), found.begin(), found.end());
  }
  return files;
}

}  // namespace

PrimitiveDictionary CommonOptions::Dictionary() const {
  return PrimitiveDictionary(k_primitives, prim_length);
}

ModelConfig CommonOptions::Model() const {
  ModelConfig m;
  m.layers = layers;
  m.heads = heads;
  m.hidden = hidden;
  m.max_seq_len = max_seq_len;
  m.vocab_size = Vocabulary(k_primitives).size();
  m.dropout = dropout;
  m.Validate();
  return m;
}

TrainPlan CommonOptions::Plan() const {
  TrainPlan p;
  p.epochs = epochs;
  p.batch_size = batch;
  p.learning_rate = lr;
  p.patience = patience;
  p.max_steps = max_steps;
  p.seed = seed;
  p.Validate();
  return p;
}

int RunIngest(const CommonOptions& c, const IngestOptions& o, std::ostream& out) {
  SketchCorpus corpus;
  json issues = json::array();
  if (o.synthetic_per_class > 0) {
    if (!o.inputs.empty()) throw UsageError("--input and --synthetic are mutually exclusive");
    std::vector<std::string> classes = c.classes.empty() ? SyntheticShapeKinds() : c.classes;
    const auto& kinds = SyntheticShapeKinds();
    for (const auto& name : classes) {
      if (std::find(kinds.begin(), kinds.end(), name) == kinds.end()) {
        throw UsageError("--classes names unknown synthetic shape '" + name + "'");
      }
    }
    corpus = SynthesizeCorpus(classes, static_cast<std::size_t>(o.synthetic_per_class), c.seed);
  } else {
    if (o.inputs.empty()) throw UsageError("--input or --synthetic is required");
    std::set<std::string> names;
    for (const auto& file : ExpandInputs(o.inputs)) {
      ParseResult r = ParseQuickDrawNdjsonFile(file);
      for (const auto& issue : r.issues) {
        issues.push_back({{"file", file.string()}, {"line", issue.line},
                          {"error", issue.is_error}, {"message", issue.message}});
      }
      out << file.string() << ": " << r.corpus.sketches.size() << " drawings, "
          << r.error_count() << " errors, " << r.warning_count() << " warnings\n";
      names.insert(r.corpus.class_names.begin(), r.corpus.class_names.end());
      for (auto& s : r.corpus.sketches) corpus.sketches.push_back(std::move(s));
    }
    corpus.class_names.assign(names.begin(), names.end());
    if (!c.classes.empty()) corpus = FilterClasses(corpus, c.classes);
  }
  corpus.Validate();
  const fs::path dir = PrepareOut(c, "ingest");
  auto [train, validation] = SplitCorpus(corpus, o.validation_fraction, c.seed);
  SaveCorpus(train, dir / "train.corpus");
  SaveCorpus(validation, dir / "validation.corpus");

  std::map<std::string, std::int64_t> per_class;
  for (const auto& s : corpus.sketches) ++per_class[s.label.value_or("")];
  json report{{"seed", c.seed},
              {"classes", corpus.class_names},
              {"per_class", per_class},
              {"train", train.sketches.size()},
              {"validation", validation.sketches.size()},
              {"issues", issues}};
  WriteText(dir / "ingest.json", report.dump(2) + "\n");
  out << corpus.class_names.size() << " classes, " << train.sketches.size() << " train, "
      << validation.sketches.size() << " validation -> " << dir.string() << '\n';
  return 0;
}

int RunTokenizeStats(const CommonOptions& c, const CorpusOptions& o, std::ostream& out) {
  Require(o.corpus, "--corpus");
  const SketchCorpus corpus = LoadFiltered(o.corpus, c.classes);
  const PrimitiveDictionary dict = c.Dictionary();
  std::vector<std::size_t> lengths;
  std::int64_t degenerate = 0;
  for (const Sketch& s : corpus.sketches) {
    try {
      lengths.push_back(EncodedLength(Abstract(Normalize(s), dict)));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDegenerateGeometry) throw;
      ++degenerate;
    }
  }
  const auto limit = static_cast<std::size_t>(c.max_seq_len);
  const auto truncated = std::count_if(lengths.begin(), lengths.end(),
                                       [&](std::size_t n) { return n > limit; });
  std::vector<std::size_t> sorted = lengths;
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) -> std::size_t {
    if (sorted.empty()) return 0;
    return sorted[std::min(sorted.size() - 1, static_cast<std::size_t>(q * double(sorted.size())))];
  };
  double mean = 0;
  for (auto n : lengths) mean += double(n);
  if (!lengths.empty()) mean /= double(lengths.size());

  // Eight equal bins over [0, max_seq_len] plus one for truncated sequences.
  constexpr std::size_t kBins = 8;
  const std::size_t width = std::max<std::size_t>(1, (limit + kBins - 1) / kBins);
  std::vector<std::int64_t> counts(kBins + 1, 0);
  for (auto n : lengths) ++counts[n > limit ? kBins : std::min(kBins - 1, n / width)];
  json bins = json::array();
  for (std::size_t b = 0; b <= kBins; ++b) {
    const bool over = b == kBins;
    bins.push_back({{"lo", over ? limit + 1 : b * width},
                    {"hi", over ? json(nullptr) : json(std::min(limit, (b + 1) * width - 1))},
                    {"count", counts[b]}});
  }
  const double rate = lengths.empty() ? 0.0 : double(truncated) / double(lengths.size());
  json report{{"sketches", corpus.sketches.size()},
              {"encoded", lengths.size()},
              {"degenerate", degenerate},
              {"max_seq_len", c.max_seq_len},
              {"truncated", truncated},
              {"truncation_rate", rate},
              {"mean_length", mean},
              {"median_length", quantile(0.5)},
              {"p95_length", quantile(0.95)},
              {"max_length", sorted.empty() ? 0 : sorted.back()},
              {"histogram", bins}};

  out << "sketches " << corpus.sketches.size() << ", encoded " << lengths.size()
      << ", degenerate " << degenerate << '\n'
      << "length mean " << std::fixed << std::setprecision(1) << mean << ", median "
      << quantile(0.5) << ", p95 " << quantile(0.95) << ", max " << report["max_length"] << '\n';
  const std::int64_t peak = *std::max_element(counts.begin(), counts.end());
  for (std::size_t b = 0; b <= kBins; ++b) {
    std::ostringstream range;
    if (b == kBins) {
      range << '>' << limit;
    } else {
      range << b * width << '-' << std::min(limit, (b + 1) * width - 1);
    }
    const int bar = peak > 0 ? static_cast<int>(std::lround(40.0 * double(counts[b]) / double(peak))) : 0;
    out << std::setw(12) << range.str() << ' ' << std::setw(7) << counts[b] << ' '
        << std::string(static_cast<std::size_t>(bar), '#') << '\n';
  }
  out << "truncation rate at max-seq-len " << c.max_seq_len << ": " << std::setprecision(4)
      << rate << " (" << truncated << " sequences)\n";
  if (!c.out.empty()) WriteText(PrepareOut(c, "tokenize-stats") / "tokenize_stats.json", report.dump(2) + "\n");
  return 0;
}

int RunPretrain(const CommonOptions& c, const CorpusOptions& o, std::ostream& out) {
  Require(o.corpus, "--corpus");
  const fs::path dir = PrepareOut(c, "pretrain");
  const SketchCorpus corpus = LoadFiltered(o.corpus, c.classes);
  std::optional<SketchCorpus> validation;
  if (!o.validation_corpus.empty()) validation = LoadFiltered(o.validation_corpus, c.classes);
  const ModelConfig config = c.Model();
  const PrimitiveDictionary dict = c.Dictionary();
  const TrainPlan plan = c.Plan();
  const SketchCorpus* val = validation ? &*validation : nullptr;
  const TrainOutcome r = WithPrecision(c.Double(), [&](auto t) {
    return Pretrain<decltype(t)>(corpus, config, dict, plan, val);
  });
  EmitTraining(dir, r, out);
  return 0;
}

int RunFinetune(const CommonOptions& c, const FinetuneOptions& o, std::ostream& out) {
  Require(o.checkpoint, "--checkpoint");
  Require(o.corpus, "--corpus");
  const fs::path dir = PrepareOut(c, "finetune");
  const Checkpoint ckpt = LoadCheckpoint(o.checkpoint);
  TrainPlan plan = c.Plan();
  plan.freeze_backbone = o.freeze_backbone;
  const bool use_double = c.Double() || ckpt.precision == Precision::kFloat64;
  SketchCorpus corpus = LoadFiltered(o.corpus, c.classes);
  std::optional<SketchCorpus> validation;
  if (!o.validation_corpus.empty()) validation = LoadFiltered(o.validation_corpus, c.classes);

  TrainOutcome r;
  if (o.task == "completion") {
    std::string name = o.class_name;
    if (name.empty()) {
      if (corpus.class_names.size() != 1) {
        throw UsageError("--class is required: the corpus has " +
                         std::to_string(corpus.class_names.size()) + " classes");
      }
      name = corpus.class_names.front();
    }
    if (corpus.ClassIndex(name) < 0) {
      throw Error(ErrorKind::kNotFound, "class '" + name + "' is not in " + o.corpus.string());
    }
    const SketchCorpus train = FilterClasses(corpus, {name});
    std::optional<SketchCorpus> val;
    if (validation) val = FilterClasses(*validation, {name});
    r = WithPrecision(use_double, [&](auto t) {
      return FinetuneCompletion<decltype(t)>(ckpt, train, plan, val ? &*val : nullptr);
    });
  } else {
    if (!o.class_name.empty()) throw UsageError("--class applies to --task completion only");
    const PrimitiveDictionary dict = ckpt.dictionary();
    const LabeledDataset train = TokenizeCorpus(corpus, dict, ckpt.config.max_seq_len);
    std::optional<LabeledDataset> val;
    if (validation) {
      validation->class_names = corpus.class_names;
      val = TokenizeCorpus(*validation, dict, ckpt.config.max_seq_len);
    }
    r = WithPrecision(use_double, [&](auto t) {
      return FinetuneClassify<decltype(t)>(ckpt, train, val ? &*val : nullptr, plan);
    });
  }
  EmitTraining(dir, r, out);
  return 0;
}

int RunGenerate(const CommonOptions& c, const SampleOptions& o, std::ostream& out) {
  const Checkpoint ckpt = ResolveGenerator(o);
  const GenerationResult g = Generate(ckpt, MakeSampler(c, o, ckpt));
  return EmitGeneration(c, ckpt, g, "generate", out);
}

int RunComplete(const CommonOptions& c, const SampleOptions& o, std::ostream& out) {
  Require(o.prefix, "--prefix");
  const Checkpoint ckpt = ResolveGenerator(o);
  const std::vector<int> prefix = PrefixTokens(ReadDrawing(o.prefix), ckpt.dictionary());
  const GenerationResult g = Complete(ckpt, prefix, MakeSampler(c, o, ckpt));
  return EmitGeneration(c, ckpt, g, "complete", out);
}

int RunClassify(const CommonOptions& c, const ClassifyOptions& o, std::ostream& out) {
  Require(o.checkpoint, "--checkpoint");
  Require(o.input, "--input");
  const Checkpoint ckpt = LoadCheckpoint(o.checkpoint);
  if (ckpt.config.num_classes <= 0) {
    throw Error(ErrorKind::kInvalidArgument, o.checkpoint.string() + " has no classification head");
  }
  const Vocabulary vocab = ckpt.vocabulary();
  TokenSequence tokens = Encode(Abstract(Normalize(ReadDrawing(o.input)), ckpt.dictionary()), vocab);
  const auto limit = static_cast<std::size_t>(ckpt.config.max_seq_len);
  if (tokens.size() > limit) tokens = PadOrTruncate(tokens, limit, vocab).tokens;

  const auto logits = ckpt.MakeModel<double>().ForwardClassify(tokens);
  std::vector<double> p(logits.values().begin(), logits.values().end());
  const double top = *std::max_element(p.begin(), p.end());
  double z = 0;
  for (double& v : p) z += (v = std::exp(v - top));
  for (double& v : p) v /= z;
  std::vector<int> order(p.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return p[a] > p[b]; });
  order.resize(std::min(order.size(), static_cast<std::size_t>(o.top_k)));

  json ranked = json::array();
  for (int i : order) ranked.push_back({{"class", ckpt.class_names.at(i)}, {"probability", p[i]}});
  json doc{{"top_k", ranked}, {"tokens", tokens.size()}};
  out << doc.dump(2) << '\n';
  if (!c.out.empty()) WriteText(PrepareOut(c, "classify") / "classification.json", doc.dump(2) + "\n");
  return 0;
}

int RunEval(const CommonOptions& c, const EvalOptions& o, std::ostream& out) {
  Require(o.checkpoint, "--checkpoint");
  const Checkpoint classifier = LoadCheckpoint(o.checkpoint);
  EvalReport report;
  if (!o.generators.empty()) {
    if (!o.corpus.empty()) throw UsageError("--corpus and --generator are mutually exclusive");
    std::vector<Checkpoint> generators;
    for (const auto& g : o.generators) {
      auto [name, path] = ParseBinding("--generator", g);
      Checkpoint ckpt = LoadCheckpoint(path);
      ckpt.class_names = {name};
      generators.push_back(std::move(ckpt));
    }
    RecognizabilityOptions opts;
    opts.samples_per_class = c.num_samples;
    opts.temperature = c.temperature;
    opts.seed = c.seed;
    report = Recognizability(generators, classifier, opts);
  } else {
    if (o.corpus.empty()) throw UsageError("--corpus or --generator is required");
    SketchCorpus corpus = LoadFiltered(o.corpus, c.classes);
    const LabeledDataset data =
        TokenizeCorpus(corpus, classifier.dictionary(), classifier.config.max_seq_len);
    report = EvaluateClassifier(classifier, data, c.batch);
  }
  out << report.ToTable();
  if (!c.out.empty()) WriteText(PrepareOut(c, "eval") / "eval.json", report.ToJson() + "\n");
  return 0;
}

int RunAblate(const CommonOptions& c, const AblateOptions& o, std::ostream& out) {
  Require(o.corpus, "--corpus");
  Require(o.test_corpus, "--test-corpus");
  AblationSpec spec;
  spec.axis = ParseAblationAxis(o.axis);
  if (spec.axis == AblationAxis::kNetworkSize) {
    if (o.shapes.empty()) throw UsageError("--shapes is required for the network_size axis");
    for (const auto& s : o.shapes) {
      NetworkShape shape;
      char d1 = 0, d2 = 0;
      std::istringstream in(s);
      if (!(in >> shape.layers >> d1 >> shape.heads >> d2 >> shape.hidden) || d1 != '-' ||
          d2 != '-' || !in.eof()) {
        throw UsageError("--shapes expects L-A-H, got '" + s + "'");
      }
      spec.shapes.push_back(shape);
    }
  } else {
    if (o.values.empty()) throw UsageError("--values is required for the " + o.axis + " axis");
    spec.values = o.values;
  }
  std::optional<Checkpoint> pretrained;
  if (!o.pretrained.empty()) pretrained = LoadCheckpoint(o.pretrained);
  spec.base_config = pretrained ? pretrained->config : c.Model();
  spec.plan = c.Plan();
  spec.base_class_count = o.base_class_count;
  spec.base_train_size = o.base_train_size;
  spec.pretrained = pretrained ? &*pretrained : nullptr;
  const PrimitiveDictionary dict = pretrained ? pretrained->dictionary() : c.Dictionary();

  const SketchCorpus train = LoadFiltered(o.corpus, c.classes);
  const SketchCorpus test = LoadFiltered(o.test_corpus, c.classes);
  const AblationTable table = RunAblation(spec, train, test, dict);
  out << table.ToTable();
  if (!c.out.empty()) {
    const fs::path dir = PrepareOut(c, "ablate");
    WriteText(dir / "ablation.csv", table.ToCsv());
    WriteText(dir / "ablation.json", table.ToJson() + "\n");
  }
  return 0;
}

int RunServe(const CommonOptions& c, const ServeOptions& o, std::ostream& out) {
  if (o.generators.empty() && o.classifier.empty()) {
    throw UsageError("--generator or --classifier is required");
  }
  ServiceConfig config;
  config.host = o.host;
  config.port = o.port;
  config.cors_allow = o.cors;
  for (const auto& g : o.generators) {
    auto [name, path] = ParseBinding("--generator", g);
    config.generators[name] = path;
  }
  if (!o.classifier.empty()) config.classifier = o.classifier;
  config.limits.max_num_samples = std::max(config.limits.max_num_samples, c.num_samples);
  config.Validate();

  Service service(config);
  if (!service.LoadMissing()) {
    out << "warning: some checkpoints failed to load; their endpoints answer 503\n";
  }
  HttpServer server(service);
  out << "listening on http://" << o.host << ':' << o.port << "/v1" << std::endl;
  if (!server.Listen(o.host, o.port)) {
    throw Error(ErrorKind::kIo, "cannot bind " + o.host + ":" + std::to_string(o.port));
  }
  return 0;
}

}  // namespace primsketch::cli

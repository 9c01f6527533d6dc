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

#include "primsketch/evaluation.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "primsketch/error.h"
#include "primsketch/ops.h"
#include "primsketch/render.h"
#include "primsketch/sampling.h"

namespace primsketch {
namespace {

std::string Fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string PadRight(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string PadLeft(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

template <typename T>
LogitMatrix ClassifyAll(const TransformerModel<T>& model,
                        const std::vector<std::vector<int>>& seqs,
                        std::span<const int> labels, std::int64_t batch_size,
                        double* mean_loss) {
  LogitMatrix lm;
  lm.classes = model.config().num_classes;
  double loss_sum = 0.0;
  for (std::size_t first = 0; first < seqs.size(); first += batch_size) {
    const std::size_t n = std::min<std::size_t>(batch_size, seqs.size() - first);
    std::span<const std::vector<int>> chunk(seqs.data() + first, n);
    const TokenBatch batch = TokenBatch::FromSequences(chunk, model.pad_id());
    Tensor<T> logits = model.ForwardClassify(nullptr, batch);
    loss_sum += static_cast<double>(
                    CrossEntropy<T>(nullptr, logits, labels.subspan(first, n), -1)
                        .item()) *
                static_cast<double>(n);
    for (T v : logits.values()) lm.values.push_back(static_cast<double>(v));
    lm.rows += static_cast<std::int64_t>(n);
  }
  if (mean_loss != nullptr) {
    *mean_loss = seqs.empty() ? 0.0 : loss_sum / static_cast<double>(seqs.size());
  }
  return lm;
}

LogitMatrix ClassifyWithCheckpoint(const Checkpoint& ckpt,
                                   const std::vector<std::vector<int>>& seqs,
                                   std::span<const int> labels,
                                   std::int64_t batch_size, double* mean_loss) {
  if (ckpt.config.num_classes < 1) {
    throw Error(ErrorKind::kInvalidArgument, "checkpoint has no classification head");
  }
  if (batch_size < 1) batch_size = 1;
  if (ckpt.precision == Precision::kFloat64) {
    return ClassifyAll(ckpt.MakeModel<double>(), seqs, labels, batch_size, mean_loss);
  }
  return ClassifyAll(ckpt.MakeModel<float>(), seqs, labels, batch_size, mean_loss);
}

nlohmann::json ReportJson(const EvalReport& r) {
  return nlohmann::json{{"top1", r.top1},
                        {"top5", r.top5},
                        {"samples", r.samples},
                        {"mean_loss", r.mean_loss},
                        {"class_names", r.class_names},
                        {"per_class_accuracy", r.per_class_accuracy},
                        {"confusion", r.confusion}};
}

// First `n` sketches of each class, in corpus order (nested across n).
SketchCorpus TakePerClass(const SketchCorpus& corpus,
                          const std::vector<std::string>& classes, int n) {
  SketchCorpus filtered = FilterClasses(corpus, classes);
  if (n <= 0) return filtered;
  SketchCorpus out;
  out.class_names = filtered.class_names;
  out.split = filtered.split;
  std::map<std::string, int> taken;
  for (const Sketch& s : filtered.sketches) {
    if (!s.label) continue;
    if (taken[*s.label]++ < n) out.sketches.push_back(s);
  }
  return out;
}

std::map<std::string, int> CountPerClass(const SketchCorpus& corpus) {
  std::map<std::string, int> counts;
  for (const Sketch& s : corpus.sketches) {
    if (s.label) ++counts[*s.label];
  }
  return counts;
}

}  // namespace

int LabelRank(std::span<const double> scores, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= scores.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "label " + std::to_string(label) + " outside score range");
  }
  const double s = scores[label];
  int rank = 0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j] > s || (scores[j] == s && static_cast<int>(j) < label)) ++rank;
  }
  return rank;
}

double TopKAccuracy(const LogitMatrix& logits, std::span<const int> labels,
                    int k) {
  if (k < 1) throw Error(ErrorKind::kInvalidArgument, "k must be >= 1");
  if (k > logits.classes) {
    throw Error(ErrorKind::kInvalidArgument,
                "k = " + std::to_string(k) + " exceeds class count " +
                    std::to_string(logits.classes));
  }
  if (static_cast<std::int64_t>(labels.size()) != logits.rows) {
    throw Error(ErrorKind::kShapeMismatch, "label count differs from logit rows");
  }
  if (logits.rows == 0) return 0.0;
  std::int64_t hits = 0;
  for (std::int64_t r = 0; r < logits.rows; ++r) {
    if (LabelRank(logits.row(r), labels[r]) < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(logits.rows);
}

EvalReport MakeEvalReport(const LogitMatrix& logits, std::span<const int> labels,
                          const std::vector<std::string>& class_names) {
  if (static_cast<std::int64_t>(class_names.size()) != logits.classes) {
    throw Error(ErrorKind::kShapeMismatch, "class names differ from logit width");
  }
  const std::size_t c = class_names.size();
  EvalReport r;
  r.class_names = class_names;
  r.samples = logits.rows;
  r.confusion.assign(c, std::vector<std::int64_t>(c, 0));
  r.per_class_accuracy.assign(c, 0.0);
  if (logits.rows == 0) return r;
  r.top1 = TopKAccuracy(logits, labels, 1);
  r.top5 = TopKAccuracy(logits, labels, std::min<int>(5, static_cast<int>(c)));
  for (std::int64_t i = 0; i < logits.rows; ++i) {
    const auto row = logits.row(i);
    int pred = 0;
    for (std::size_t j = 1; j < c; ++j) {
      if (row[j] > row[pred]) pred = static_cast<int>(j);
    }
    ++r.confusion[labels[i]][pred];
  }
  for (std::size_t t = 0; t < c; ++t) {
    std::int64_t total = 0;
    for (auto v : r.confusion[t]) total += v;
    r.per_class_accuracy[t] =
        total ? static_cast<double>(r.confusion[t][t]) / static_cast<double>(total)
              : 0.0;
  }
  return r;
}

std::string EvalReport::ToJson() const { return ReportJson(*this).dump(); }

std::string EvalReport::ToTable() const {
  std::ostringstream out;
  out << "samples " << samples << "  top1 " << Fixed(100 * top1, 2) << "%  top5 "
      << Fixed(100 * top5, 2) << "%  loss " << Fixed(mean_loss, 4) << '\n';
  std::size_t w = 5;
  for (const auto& n : class_names) w = std::max(w, n.size());
  out << PadRight("class", w) << "  " << PadLeft("acc", 7);
  for (std::size_t j = 0; j < class_names.size(); ++j) {
    out << "  " << PadLeft(std::to_string(j), 6);
  }
  out << '\n';
  for (std::size_t i = 0; i < class_names.size(); ++i) {
    out << PadRight(class_names[i], w) << "  "
        << PadLeft(Fixed(100 * per_class_accuracy[i], 2), 7);
    for (auto v : confusion[i]) out << "  " << PadLeft(std::to_string(v), 6);
    out << '\n';
  }
  return out.str();
}

EvalReport EvaluateClassifier(const Checkpoint& checkpoint,
                              const LabeledDataset& data,
                              std::int64_t batch_size) {
  data.Validate();
  if (checkpoint.class_names != data.class_names) {
    throw Error(ErrorKind::kInvalidArgument,
                "classifier classes differ from the dataset's classes");
  }
  std::vector<std::vector<int>> seqs;
  std::vector<int> labels;
  for (const auto& e : data.examples) {
    seqs.push_back(e.tokens.ids);
    labels.push_back(e.label);
  }
  double loss = 0.0;
  const LogitMatrix lm = ClassifyWithCheckpoint(checkpoint, seqs, labels, batch_size, &loss);
  EvalReport r = MakeEvalReport(lm, labels, data.class_names);
  r.mean_loss = loss;
  return r;
}

EvalReport Recognizability(const std::vector<Checkpoint>& generators,
                           const Checkpoint& classifier,
                           const RecognizabilityOptions& options) {
  const auto& names = classifier.class_names;
  std::set<std::string> gen_classes;
  for (const Checkpoint& g : generators) {
    if (g.class_names.size() != 1) {
      throw Error(ErrorKind::kInvalidArgument,
                  "each generator must be fine-tuned on exactly one class");
    }
    gen_classes.insert(g.class_names.front());
  }
  if (gen_classes != std::set<std::string>(names.begin(), names.end()) ||
      gen_classes.size() != generators.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "generator classes and classifier classes disagree");
  }
  const Vocabulary cls_vocab = classifier.vocabulary();
  std::vector<std::vector<int>> seqs;
  std::vector<int> labels;
  for (const Checkpoint& g : generators) {
    if (g.vocabulary() != cls_vocab) {
      throw Error(ErrorKind::kInvalidArgument,
                  "generator and classifier use different vocabularies");
    }
    const int label = static_cast<int>(
        std::find(names.begin(), names.end(), g.class_names.front()) - names.begin());
    SamplerConfig sc;
    sc.temperature = options.temperature;
    sc.num_samples = static_cast<int>(options.samples_per_class);
    sc.seed = MixSeed(options.seed, static_cast<std::uint64_t>(label));
    sc.max_new_tokens =
        options.max_new_tokens > 0 ? options.max_new_tokens : g.config.max_seq_len;
    const GenerationResult gen = Generate(g, sc);
    for (const auto& s : gen.sequences) {
      TokenSequence clean;
      clean.ids = SanitizeTokens(s.tokens, cls_vocab).ids;
      clean.attention_length = clean.ids.size();
      const std::size_t max_len = classifier.config.max_seq_len;
      if (clean.ids.size() > max_len) {
        PadResult p = PadOrTruncate(clean, max_len, cls_vocab);
        clean = std::move(p.tokens);
        clean.ids.resize(clean.attention_length);
      }
      seqs.push_back(std::move(clean.ids));
      labels.push_back(label);
    }
  }
  double loss = 0.0;
  const LogitMatrix lm = ClassifyWithCheckpoint(classifier, seqs, labels, 32, &loss);
  EvalReport r = MakeEvalReport(lm, labels, names);
  r.mean_loss = loss;
  return r;
}

AblationAxis ParseAblationAxis(const std::string& name) {
  if (name == "class_count" || name == "class-count") return AblationAxis::kClassCount;
  if (name == "train_size" || name == "train-size") return AblationAxis::kTrainSize;
  if (name == "network_size" || name == "network-size") return AblationAxis::kNetworkSize;
  throw Error(ErrorKind::kInvalidArgument, "unknown ablation axis '" + name + "'");
}

std::string AblationAxisName(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::kClassCount: return "class_count";
    case AblationAxis::kTrainSize: return "train_size";
    case AblationAxis::kNetworkSize: return "network_size";
  }
  return "unknown";
}

std::string AblationTable::ToTable() const {
  std::ostringstream out;
  std::size_t w = AblationAxisName(axis).size();
  for (const auto& p : points) w = std::max(w, p.label.size());
  out << PadRight(AblationAxisName(axis), w) << "  " << PadLeft("top1", 7) << "  "
      << PadLeft("top5", 7) << "  " << PadLeft("samples", 7) << "  "
      << PadLeft("wall_s", 8) << '\n';
  for (const auto& p : points) {
    out << PadRight(p.label, w) << "  ";
    if (p.skipped) {
      out << "skipped: " << p.skip_reason << '\n';
      continue;
    }
    out << PadLeft(Fixed(100 * p.report.top1, 2), 7) << "  "
        << PadLeft(Fixed(100 * p.report.top5, 2), 7) << "  "
        << PadLeft(std::to_string(p.report.samples), 7) << "  "
        << PadLeft(Fixed(p.wall_ms / 1000.0, 1), 8) << '\n';
  }
  return out.str();
}

std::string AblationTable::ToJson() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& p : points) {
    nlohmann::json j{{"label", p.label}, {"skipped", p.skipped}, {"wall_ms", p.wall_ms}};
    if (p.skipped) {
      j["skip_reason"] = p.skip_reason;
    } else {
      j["report"] = ReportJson(p.report);
    }
    rows.push_back(std::move(j));
  }
  return nlohmann::json{{"axis", AblationAxisName(axis)}, {"points", rows}}.dump();
}

std::string AblationTable::ToCsv() const {
  std::ostringstream out;
  out << "axis,label,skipped,top1,top5,samples,wall_ms,skip_reason\n";
  for (const auto& p : points) {
    out << AblationAxisName(axis) << ',' << p.label << ',' << (p.skipped ? 1 : 0)
        << ',' << Fixed(p.report.top1, 6) << ',' << Fixed(p.report.top5, 6) << ','
        << p.report.samples << ',' << Fixed(p.wall_ms, 1) << ",\"" << p.skip_reason
        << "\"\n";
  }
  return out.str();
}

AblationTable RunAblation(const AblationSpec& spec, const SketchCorpus& train,
                          const SketchCorpus& test,
                          const PrimitiveDictionary& dict) {
  AblationTable table;
  table.axis = spec.axis;
  const auto counts = CountPerClass(train);
  const int available = static_cast<int>(train.class_names.size());
  const std::size_t grid = spec.axis == AblationAxis::kNetworkSize
                               ? spec.shapes.size()
                               : spec.values.size();
  if (grid == 0) {
    throw Error(ErrorKind::kInvalidArgument, "ablation grid is empty");
  }
  for (std::size_t gi = 0; gi < grid; ++gi) {
    AblationPoint point;
    int class_count = spec.base_class_count > 0 ? spec.base_class_count : available;
    int per_class = spec.base_train_size;
    ModelConfig config = spec.base_config;
    config.vocab_size = dict.orientation_count() + 4;
    config.num_classes = 0;
    switch (spec.axis) {
      case AblationAxis::kClassCount:
        class_count = spec.values[gi];
        point.label = std::to_string(class_count) + " classes";
        break;
      case AblationAxis::kTrainSize:
        per_class = spec.values[gi];
        point.label = std::to_string(per_class);
        break;
      case AblationAxis::kNetworkSize: {
        const NetworkShape& s = spec.shapes[gi];
        config.layers = s.layers;
        config.heads = s.heads;
        config.hidden = s.hidden;
        point.label = std::to_string(s.layers) + "-" + std::to_string(s.heads) +
                      "-" + std::to_string(s.hidden);
        break;
      }
    }
    auto skip = [&](const std::string& why) {
      point.skipped = true;
      point.skip_reason = why;
      table.points.push_back(point);
    };
    if (class_count < 1 || class_count > available) {
      skip("class count " + std::to_string(class_count) + " outside corpus (" +
           std::to_string(available) + " classes)");
      continue;
    }
    if (spec.axis == AblationAxis::kTrainSize && per_class < 1) {
      skip("train size must be positive");
      continue;
    }
    std::vector<std::string> classes(train.class_names.begin(),
                                     train.class_names.begin() + class_count);
    std::string short_class;
    for (const auto& c : classes) {
      auto it = counts.find(c);
      const int have = it == counts.end() ? 0 : it->second;
      if (have == 0 || (per_class > 0 && have < per_class)) {
        short_class = c + " has " + std::to_string(have) + " samples";
        break;
      }
    }
    if (!short_class.empty()) {
      skip("infeasible: " + short_class);
      continue;
    }
    try {
      config.Validate();
    } catch (const Error& e) {
      skip(e.what());
      continue;
    }

    const auto start = std::chrono::steady_clock::now();
    SketchCorpus subset = TakePerClass(train, classes, per_class);
    const SketchCorpus test_subset = FilterClasses(test, classes);
    LabeledDataset val;
    const LabeledDataset* val_ptr = nullptr;
    if (spec.plan.validation_fraction > 0) {
      auto [tr, va] = SplitCorpus(subset, spec.plan.validation_fraction, spec.plan.seed);
      if (!tr.sketches.empty() && !va.sketches.empty()) {
        subset = std::move(tr);
        val = TokenizeCorpus(va, dict, config.max_seq_len);
        val_ptr = &val;
      }
    }
    const LabeledDataset train_data = TokenizeCorpus(subset, dict, config.max_seq_len);
    const LabeledDataset test_data =
        TokenizeCorpus(test_subset, dict, config.max_seq_len);

    Checkpoint init;
    if (spec.pretrained != nullptr && spec.pretrained->config.layers == config.layers &&
        spec.pretrained->config.heads == config.heads &&
        spec.pretrained->config.hidden == config.hidden) {
      init = *spec.pretrained;
    } else {
      init = InitialCheckpoint(config, dict, spec.plan.seed);
    }
    TrainOutcome outcome = FinetuneClassify<float>(init, train_data, val_ptr, spec.plan);
    point.report = EvaluateClassifier(outcome.checkpoint, test_data);
    point.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    table.points.push_back(std::move(point));
  }
  return table;
}

}  // namespace primsketch

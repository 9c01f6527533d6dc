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

#ifndef PRIMSKETCH_EVALUATION_H_
#define PRIMSKETCH_EVALUATION_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "primsketch/checkpoint.h"
#include "primsketch/stroke_data.h"
#include "primsketch/training.h"

namespace primsketch {

// Row-major [rows x classes] scores.
struct LogitMatrix {
  std::int64_t rows = 0;
  std::int64_t classes = 0;
  std::vector<double> values;

  std::span<const double> row(std::int64_t r) const {
    return std::span<const double>(values).subspan(r * classes, classes);
  }
};

// Rank of `label` when the row is sorted by descending score, with equal
// scores ordered by lower class index first. 0 means top-1.
int LabelRank(std::span<const double> scores, int label);

// Fraction of rows whose label ranks within the top k. Throws for k < 1 or
// k > classes.
double TopKAccuracy(const LogitMatrix& logits, std::span<const int> labels,
                    int k);

struct EvalReport {
  double top1 = 0.0;
  double top5 = 0.0;  // top-min(5, classes)
  std::vector<std::string> class_names;
  // confusion[true][predicted]
  std::vector<std::vector<std::int64_t>> confusion;
  std::vector<double> per_class_accuracy;
  std::int64_t samples = 0;
  double mean_loss = 0.0;

  std::string ToJson() const;
  std::string ToTable() const;
};

EvalReport MakeEvalReport(const LogitMatrix& logits, std::span<const int> labels,
                          const std::vector<std::string>& class_names);

// Runs the classifier in `checkpoint` over `data`.
EvalReport EvaluateClassifier(const Checkpoint& checkpoint,
                              const LabeledDataset& data,
                              std::int64_t batch_size = 32);

struct RecognizabilityOptions {
  std::int64_t samples_per_class = 100;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  std::int64_t max_new_tokens = 0;  // 0: up to the context window
};

// Generates samples_per_class sketches from each per-class generator and
// scores them with the classifier, using the generating class as the label.
// `generators[i]` must have been fine-tuned on `classifier.class_names[i]`
// or be listed under the same class name. Throws if the class sets differ.
EvalReport Recognizability(const std::vector<Checkpoint>& generators,
                           const Checkpoint& classifier,
                           const RecognizabilityOptions& options);

enum class AblationAxis { kClassCount, kTrainSize, kNetworkSize };

AblationAxis ParseAblationAxis(const std::string& name);
std::string AblationAxisName(AblationAxis axis);

struct NetworkShape {
  int layers = 0;
  int heads = 0;
  int hidden = 0;
};

struct AblationPoint {
  std::string label;  // e.g. "25 classes", "1000", "4-8-256"
  bool skipped = false;
  std::string skip_reason;
  EvalReport report;
  double wall_ms = 0.0;
};

struct AblationTable {
  AblationAxis axis = AblationAxis::kTrainSize;
  std::vector<AblationPoint> points;

  std::string ToTable() const;
  std::string ToJson() const;
  std::string ToCsv() const;
};

struct AblationSpec {
  AblationAxis axis = AblationAxis::kTrainSize;
  // class_count and train_size grids use `values`; network_size uses shapes.
  std::vector<int> values;
  std::vector<NetworkShape> shapes;

  ModelConfig base_config;
  TrainPlan plan;
  int base_class_count = 0;   // classes used on the train-size/network axes
  int base_train_size = 0;    // samples per class on the other axes; 0 = all
  // Optional backbone to fine-tune from (same architecture); otherwise each
  // point trains from a seeded random init.
  const Checkpoint* pretrained = nullptr;
};

// Runs FinetuneClassify once per grid point with everything else fixed and
// evaluates on `test`. Infeasible points (more classes or samples than the
// corpus holds) are skipped with a reason.
AblationTable RunAblation(const AblationSpec& spec, const SketchCorpus& train,
                          const SketchCorpus& test,
                          const PrimitiveDictionary& dict);

}  // namespace primsketch

#endif  // PRIMSKETCH_EVALUATION_H_

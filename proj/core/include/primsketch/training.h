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

#ifndef PRIMSKETCH_TRAINING_H_
#define PRIMSKETCH_TRAINING_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "primsketch/checkpoint.h"
#include "primsketch/stroke_data.h"

namespace primsketch {

struct LabeledExample {
  TokenSequence tokens;
  int label = 0;
};

struct LabeledDataset {
  std::vector<LabeledExample> examples;
  std::vector<std::string> class_names;
  std::int64_t truncated = 0;   // sequences cut to the context window
  std::int64_t degenerate = 0;  // sketches dropped by abstraction

  void Validate() const;
};

// Normalize -> abstract -> encode -> truncate to max_seq_len (PAD stripped).
// Sketches without a label get -1; degenerate sketches are counted and
// skipped.
LabeledDataset TokenizeCorpus(const SketchCorpus& corpus,
                              const PrimitiveDictionary& dict,
                              std::int64_t max_seq_len);

enum class SelectionMetric { kValidationLoss, kValidationAccuracy };

struct TrainPlan {
  int epochs = 10;
  int batch_size = 16;
  double learning_rate = 3e-4;
  double warmup_fraction = 0.05;
  double grad_clip = 1.0;
  int patience = 3;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
  std::int64_t max_steps = 0;  // 0: no cap
  bool freeze_backbone = false;
  bool early_stopping = true;
  // Classification defaults to accuracy; language modelling always uses loss.
  SelectionMetric selection = SelectionMetric::kValidationAccuracy;

  void Validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // exact mean of the epoch's batch losses
  double val_loss = 0.0;    // token- (or example-) weighted mean
  double val_top1 = 0.0;
  double val_top5 = 0.0;
  double wall_ms = 0.0;
  std::int64_t steps = 0;   // cumulative optimizer steps
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  std::vector<double> step_losses;
  int best_epoch = -1;
  double best_metric = 0.0;
  bool stopped_early = false;
  std::int64_t truncated = 0;
  std::int64_t degenerate = 0;

  // One JSON object per line: {epoch, split, loss, top1, top5, wall_ms}.
  void WriteMetricsLog(std::ostream& out) const;
};

struct EarlyStopDecision {
  bool stop = false;
  int best_epoch = -1;  // 0-based; ties keep the earliest
};

// Stop once the metric has gone `patience` consecutive epochs without a
// strict improvement on the best value so far.
EarlyStopDecision EarlyStop(std::span<const double> history, int patience,
                            bool higher_is_better = false);

struct TrainOutcome {
  Checkpoint checkpoint;
  TrainingHistory history;
};

// Next-token pre-training over every class of the corpus. When `validation`
// is null, plan.validation_fraction of the corpus is held out.
template <typename T = float>
TrainOutcome Pretrain(const SketchCorpus& corpus, const ModelConfig& config,
                      const PrimitiveDictionary& dict, const TrainPlan& plan,
                      const SketchCorpus* validation = nullptr);

// Continues next-token training on a single class. A zero-epoch plan returns
// the input checkpoint unchanged.
template <typename T = float>
TrainOutcome FinetuneCompletion(const Checkpoint& checkpoint,
                                const SketchCorpus& class_corpus,
                                const TrainPlan& plan,
                                const SketchCorpus* validation = nullptr);

// Cross-entropy on class logits read at EOS. Adds a head sized to
// data.class_names if the checkpoint has none.
template <typename T = float>
TrainOutcome FinetuneClassify(const Checkpoint& checkpoint,
                              const LabeledDataset& train,
                              const LabeledDataset* validation,
                              const TrainPlan& plan);

// Fresh randomly initialized checkpoint (the "from scratch" baseline).
Checkpoint InitialCheckpoint(const ModelConfig& config,
                             const PrimitiveDictionary& dict,
                             std::uint64_t seed);

// Mean next-token NLL of `sequences` (PAD targets excluded).
template <typename T = float>
double LanguageModelLoss(const TransformerModel<T>& model,
                         std::span<const std::vector<int>> sequences,
                         std::int64_t batch_size = 32);

}  // namespace primsketch

#endif  // PRIMSKETCH_TRAINING_H_

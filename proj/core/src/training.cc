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

#include "primsketch/training.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "primsketch/adam.h"
#include "primsketch/error.h"
#include "primsketch/evaluation.h"
#include "primsketch/ops.h"

namespace primsketch {
namespace {

using Clock = std::chrono::steady_clock;

double MillisSince(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Targets for next-token prediction: position t predicts token t+1; the
// final column and PAD targets are ignored.
std::vector<int> ShiftedTargets(const TokenBatch& batch, int pad) {
  std::vector<int> targets(batch.ids.size(), pad);
  for (std::int64_t b = 0; b < batch.batch; ++b) {
    for (std::int64_t t = 0; t + 1 < batch.seq_len; ++t) {
      targets[b * batch.seq_len + t] = batch.ids[b * batch.seq_len + t + 1];
    }
  }
  return targets;
}

std::int64_t CountTargets(std::span<const int> targets, int ignore) {
  return std::count_if(targets.begin(), targets.end(),
                       [&](int t) { return t != ignore; });
}

struct EvalMetrics {
  double loss = 0.0;
  double top1 = 0.0;
  double top5 = 0.0;
};

template <typename T>
using BatchLossFn = std::function<Tensor<T>(
    const TransformerModel<T>&, Tape<T>*, std::span<const std::size_t>,
    std::mt19937_64&)>;

template <typename T>
using EvalFn = std::function<EvalMetrics(const TransformerModel<T>&)>;

struct LoopResult {
  TrainingHistory history;
  std::optional<AdamState> optimizer;
};

// Shared optimization loop: shuffled mini-batches, warmup, clipping,
// per-epoch evaluation, best-epoch snapshot and early stopping. On return
// `model` holds the parameters of the best epoch.
template <typename T>
LoopResult RunLoop(TransformerModel<T>& model, std::size_t example_count,
                   const BatchLossFn<T>& batch_loss, const EvalFn<T>& evaluate,
                   const TrainPlan& plan, bool higher_is_better,
                   const std::optional<AdamState>& resume) {
  if (example_count == 0) {
    throw Error(ErrorKind::kInvalidArgument, "training set is empty");
  }
  auto named = model.params().Named();
  std::vector<Tensor<T>> trainable;
  for (auto& [name, t] : named) {
    const bool head = name.rfind("cls_", 0) == 0;
    const bool on = !plan.freeze_backbone || head;
    t.set_requires_grad(on);
    if (on) trainable.push_back(t);
  }
  const bool full = trainable.size() == named.size();
  Adam<T> adam(trainable, AdamConfig{plan.learning_rate, 0.9, 0.999, 1e-8});
  if (resume && full && resume->first_moment.size() == trainable.size()) {
    adam.RestoreState(*resume);
  }

  const std::int64_t batches_per_epoch =
      (static_cast<std::int64_t>(example_count) + plan.batch_size - 1) /
      plan.batch_size;
  std::int64_t total_steps = batches_per_epoch * plan.epochs;
  if (plan.max_steps > 0) total_steps = std::min(total_steps, plan.max_steps);
  const std::int64_t warmup = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(
             std::llround(plan.warmup_fraction * static_cast<double>(total_steps))));

  LoopResult out;
  TrainingHistory& hist = out.history;
  std::vector<double> metrics;
  ModelParameters<T> best = CloneParameters(model.params());
  std::optional<AdamState> best_adam;
  std::mt19937_64 dropout_rng(MixSeed(plan.seed, 0xd50u));
  std::vector<std::size_t> order(example_count);
  std::int64_t step = 0;

  for (int epoch = 0; epoch < plan.epochs && step < total_steps; ++epoch) {
    const auto start = Clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 shuffle_rng(MixSeed(plan.seed, 1000 + epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    std::int64_t loss_count = 0;
    for (std::size_t first = 0; first < order.size() && step < total_steps;
         first += plan.batch_size) {
      const std::size_t last =
          std::min(order.size(), first + static_cast<std::size_t>(plan.batch_size));
      std::span<const std::size_t> idx(order.data() + first, last - first);
      adam.ZeroGrad();
      Tape<T> tape;
      Tensor<T> loss = batch_loss(model, &tape, idx, dropout_rng);
      const double value = static_cast<double>(loss.item());
      if (!std::isfinite(value)) {
        throw Error(ErrorKind::kInvalidArgument,
                    "training loss diverged at step " + std::to_string(step));
      }
      tape.Backward(loss);
      if (plan.grad_clip > 0) ClipGradNorm(trainable, plan.grad_clip);
      adam.Step(WarmupLearningRate(plan.learning_rate, step, warmup));
      ++step;
      hist.step_losses.push_back(value);
      loss_sum += value;
      ++loss_count;
    }

    const EvalMetrics m = evaluate(model);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_count ? loss_sum / loss_count : 0.0;
    rec.val_loss = m.loss;
    rec.val_top1 = m.top1;
    rec.val_top5 = m.top5;
    rec.steps = step;
    rec.wall_ms = MillisSince(start);
    hist.epochs.push_back(rec);

    const double metric = higher_is_better ? m.top1 : m.loss;
    metrics.push_back(metric);
    const EarlyStopDecision d =
        EarlyStop(metrics, plan.early_stopping ? plan.patience : 1 << 30,
                  higher_is_better);
    if (d.best_epoch == epoch) {
      best = CloneParameters(model.params());
      if (full) best_adam = adam.state();
    }
    hist.best_epoch = d.best_epoch;
    hist.best_metric = metrics[d.best_epoch];
    if (d.stop) {
      hist.stopped_early = true;
      break;
    }
  }
  if (!hist.epochs.empty()) model.params() = best;
  out.optimizer = best_adam;
  return out;
}

std::vector<std::vector<int>> Gather(std::span<const std::vector<int>> seqs,
                                     std::span<const std::size_t> idx) {
  std::vector<std::vector<int>> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(seqs[i]);
  return out;
}

std::vector<std::vector<int>> IdsOf(const LabeledDataset& data) {
  std::vector<std::vector<int>> out;
  out.reserve(data.examples.size());
  for (const auto& e : data.examples) out.push_back(e.tokens.ids);
  return out;
}

template <typename T>
Tensor<T> LmBatchLoss(const TransformerModel<T>& model, Tape<T>* tape,
                      std::span<const std::vector<int>> seqs,
                      const ForwardOptions& opts) {
  const TokenBatch batch = TokenBatch::FromSequences(seqs, model.pad_id());
  const std::vector<int> targets = ShiftedTargets(batch, model.pad_id());
  Tensor<T> logits = model.ForwardLm(tape, batch, opts);
  return CrossEntropy(tape, logits, std::span<const int>(targets), model.pad_id());
}

template <typename T>
TrainOutcome TrainLanguageModel(TransformerModel<T> model,
                                const PrimitiveDictionary& dict,
                                const LabeledDataset& train,
                                const LabeledDataset* validation,
                                const TrainPlan& plan, std::string task,
                                const std::optional<AdamState>& resume) {
  const auto train_ids = IdsOf(train);
  const auto val_ids = validation ? IdsOf(*validation)
                                  : std::vector<std::vector<int>>{};
  const std::int64_t bs = plan.batch_size;
  BatchLossFn<T> loss_fn = [&](const TransformerModel<T>& m, Tape<T>* tape,
                               std::span<const std::size_t> idx,
                               std::mt19937_64& rng) {
    const auto seqs = Gather(train_ids, idx);
    ForwardOptions opts;
    opts.training = true;
    opts.rng = &rng;
    return LmBatchLoss(m, tape, std::span<const std::vector<int>>(seqs), opts);
  };
  EvalFn<T> eval_fn = [&](const TransformerModel<T>& m) {
    const auto& ids = val_ids.empty() ? train_ids : val_ids;
    return EvalMetrics{LanguageModelLoss(m, std::span<const std::vector<int>>(ids), bs),
                       0.0, 0.0};
  };
  LoopResult r = RunLoop(model, train_ids.size(), loss_fn, eval_fn, plan,
                         /*higher_is_better=*/false, resume);
  TrainOutcome out{Checkpoint::FromModel(model, dict), std::move(r.history)};
  out.history.truncated = train.truncated;
  out.history.degenerate = train.degenerate;
  out.checkpoint.state.task = std::move(task);
  out.checkpoint.state.epoch = static_cast<std::int64_t>(out.history.epochs.size());
  out.checkpoint.state.best_epoch = out.history.best_epoch;
  out.checkpoint.state.best_metric = out.history.best_metric;
  out.checkpoint.state.optimizer = r.optimizer;
  return out;
}

std::set<std::string> DistinctLabels(const SketchCorpus& corpus) {
  std::set<std::string> labels;
  for (const auto& s : corpus.sketches) {
    if (s.label) labels.insert(*s.label);
  }
  return labels;
}

}  // namespace

void LabeledDataset::Validate() const {
  const int n = static_cast<int>(class_names.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const int l = examples[i].label;
    if (l < 0 || l >= n) {
      throw Error(ErrorKind::kInvalidArgument,
                  "example " + std::to_string(i) + " has unknown class index " +
                      std::to_string(l));
    }
  }
}

LabeledDataset TokenizeCorpus(const SketchCorpus& corpus,
                              const PrimitiveDictionary& dict,
                              std::int64_t max_seq_len) {
  if (max_seq_len < 3) {
    throw Error(ErrorKind::kInvalidArgument, "max_seq_len must be at least 3");
  }
  const Vocabulary vocab(dict.orientation_count());
  LabeledDataset out;
  out.class_names = corpus.class_names;
  out.examples.reserve(corpus.sketches.size());
  for (const Sketch& sketch : corpus.sketches) {
    AbstractedSketch abstracted;
    try {
      abstracted = Abstract(Normalize(sketch), dict);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDegenerateGeometry) throw;
      ++out.degenerate;
      continue;
    }
    TokenSequence tokens = Encode(abstracted, vocab);
    if (tokens.size() > static_cast<std::size_t>(max_seq_len)) {
      PadResult r = PadOrTruncate(tokens, static_cast<std::size_t>(max_seq_len), vocab);
      ++out.truncated;
      tokens = std::move(r.tokens);
      tokens.ids.resize(tokens.attention_length);
    }
    LabeledExample ex;
    ex.tokens = std::move(tokens);
    ex.label = sketch.label ? corpus.ClassIndex(*sketch.label) : -1;
    out.examples.push_back(std::move(ex));
  }
  return out;
}

void TrainPlan::Validate() const {
  auto bad = [](const std::string& what) {
    throw Error(ErrorKind::kInvalidArgument, "invalid training plan: " + what);
  };
  if (epochs < 0) bad("epochs must be >= 0");
  if (batch_size < 1) bad("batch_size must be >= 1");
  if (!(learning_rate > 0)) bad("learning_rate must be > 0");
  if (warmup_fraction < 0 || warmup_fraction > 1) bad("warmup_fraction must be in [0, 1]");
  if (patience < 1) bad("patience must be >= 1");
  if (validation_fraction < 0 || validation_fraction >= 1) {
    bad("validation_fraction must be in [0, 1)");
  }
  if (max_steps < 0) bad("max_steps must be >= 0");
}

void TrainingHistory::WriteMetricsLog(std::ostream& out) const {
  for (const EpochRecord& e : epochs) {
    nlohmann::json train{{"epoch", e.epoch}, {"split", "train"},
                         {"loss", e.train_loss}, {"top1", nullptr},
                         {"top5", nullptr}, {"wall_ms", e.wall_ms}};
    nlohmann::json val{{"epoch", e.epoch}, {"split", "validation"},
                       {"loss", e.val_loss}, {"top1", e.val_top1},
                       {"top5", e.val_top5}, {"wall_ms", e.wall_ms}};
    out << train.dump() << '\n' << val.dump() << '\n';
  }
}

EarlyStopDecision EarlyStop(std::span<const double> history, int patience,
                            bool higher_is_better) {
  if (patience < 1) {
    throw Error(ErrorKind::kInvalidArgument, "patience must be >= 1");
  }
  EarlyStopDecision d;
  if (history.empty()) return d;
  d.best_epoch = 0;
  int since = 0;
  for (std::size_t i = 1; i < history.size(); ++i) {
    const double best = history[d.best_epoch];
    const bool better = higher_is_better ? history[i] > best : history[i] < best;
    if (better) {
      d.best_epoch = static_cast<int>(i);
      since = 0;
    } else {
      ++since;
    }
  }
  d.stop = since >= patience;
  return d;
}

Checkpoint InitialCheckpoint(const ModelConfig& config,
                             const PrimitiveDictionary& dict,
                             std::uint64_t seed) {
  TransformerModel<double> model(config, seed);
  return Checkpoint::FromModel(model, dict);
}

template <typename T>
double LanguageModelLoss(const TransformerModel<T>& model,
                         std::span<const std::vector<int>> sequences,
                         std::int64_t batch_size) {
  if (batch_size < 1) batch_size = 1;
  double total = 0.0;
  std::int64_t count = 0;
  for (std::size_t first = 0; first < sequences.size(); first += batch_size) {
    const std::size_t n =
        std::min<std::size_t>(batch_size, sequences.size() - first);
    auto chunk = sequences.subspan(first, n);
    const TokenBatch batch = TokenBatch::FromSequences(chunk, model.pad_id());
    const std::vector<int> targets = ShiftedTargets(batch, model.pad_id());
    const std::int64_t c = CountTargets(targets, model.pad_id());
    if (c == 0) continue;
    Tensor<T> logits = model.ForwardLm(nullptr, batch);
    const Tensor<T> loss =
        CrossEntropy<T>(nullptr, logits, std::span<const int>(targets), model.pad_id());
    total += static_cast<double>(loss.item()) * static_cast<double>(c);
    count += c;
  }
  if (count == 0) {
    throw Error(ErrorKind::kInvalidArgument, "no tokens to score");
  }
  return total / static_cast<double>(count);
}

template <typename T>
TrainOutcome Pretrain(const SketchCorpus& corpus, const ModelConfig& config,
                      const PrimitiveDictionary& dict, const TrainPlan& plan,
                      const SketchCorpus* validation) {
  plan.Validate();
  ModelConfig cfg = config;
  cfg.vocab_size = dict.orientation_count() + 4;
  cfg.num_classes = 0;
  cfg.Validate();
  LabeledDataset train, val;
  bool have_val = false;
  if (validation) {
    train = TokenizeCorpus(corpus, dict, cfg.max_seq_len);
    val = TokenizeCorpus(*validation, dict, cfg.max_seq_len);
    have_val = true;
  } else if (plan.validation_fraction > 0) {
    auto [tr, va] = SplitCorpus(corpus, plan.validation_fraction, plan.seed);
    train = TokenizeCorpus(tr, dict, cfg.max_seq_len);
    val = TokenizeCorpus(va, dict, cfg.max_seq_len);
    have_val = !val.examples.empty();
  } else {
    train = TokenizeCorpus(corpus, dict, cfg.max_seq_len);
  }
  TransformerModel<T> model(cfg, plan.seed);
  TrainOutcome out = TrainLanguageModel(std::move(model), dict, train,
                                        have_val ? &val : nullptr, plan,
                                        "pretrain", std::nullopt);
  out.checkpoint.class_names = corpus.class_names;
  out.checkpoint.precision = sizeof(T) == 4 ? Precision::kFloat32 : Precision::kFloat64;
  return out;
}

template <typename T>
TrainOutcome FinetuneCompletion(const Checkpoint& checkpoint,
                                const SketchCorpus& class_corpus,
                                const TrainPlan& plan,
                                const SketchCorpus* validation) {
  plan.Validate();
  const auto labels = DistinctLabels(class_corpus);
  if (labels.size() > 1) {
    throw Error(ErrorKind::kInvalidArgument,
                "completion fine-tuning needs a single-class corpus, got " +
                    std::to_string(labels.size()) + " classes");
  }
  if (plan.epochs == 0) return TrainOutcome{checkpoint, {}};
  const PrimitiveDictionary dict = checkpoint.dictionary();
  const int max_len = checkpoint.config.max_seq_len;
  LabeledDataset train = TokenizeCorpus(class_corpus, dict, max_len);
  LabeledDataset val;
  bool have_val = false;
  if (validation) {
    val = TokenizeCorpus(*validation, dict, max_len);
    have_val = !val.examples.empty();
  } else if (plan.validation_fraction > 0 && train.examples.size() > 1) {
    auto [tr, va] = SplitCorpus(class_corpus, plan.validation_fraction, plan.seed);
    if (!va.sketches.empty() && !tr.sketches.empty()) {
      train = TokenizeCorpus(tr, dict, max_len);
      val = TokenizeCorpus(va, dict, max_len);
      have_val = !val.examples.empty();
    }
  }
  const auto resume = checkpoint.state.optimizer;
  TrainOutcome out = TrainLanguageModel(checkpoint.MakeModel<T>(), dict, train,
                                        have_val ? &val : nullptr, plan,
                                        "completion", resume);
  out.checkpoint.class_names =
      labels.empty() ? checkpoint.class_names
                     : std::vector<std::string>{*labels.begin()};
  out.checkpoint.precision = sizeof(T) == 4 ? Precision::kFloat32 : Precision::kFloat64;
  return out;
}

template <typename T>
TrainOutcome FinetuneClassify(const Checkpoint& checkpoint,
                              const LabeledDataset& train,
                              const LabeledDataset* validation,
                              const TrainPlan& plan) {
  plan.Validate();
  train.Validate();
  if (validation) {
    validation->Validate();
    if (validation->class_names != train.class_names) {
      throw Error(ErrorKind::kInvalidArgument,
                  "validation classes differ from training classes");
    }
  }
  if (train.class_names.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "classification needs class names");
  }
  TransformerModel<T> model = checkpoint.MakeModel<T>();
  const int classes = static_cast<int>(train.class_names.size());
  const bool reuse_head = checkpoint.config.num_classes == classes &&
                          checkpoint.class_names == train.class_names;
  if (!reuse_head) model.ResetClassifierHead(classes);
  if (plan.epochs == 0) {
    TrainOutcome out{Checkpoint::FromModel(model, checkpoint.dictionary()), {}};
    out.checkpoint.class_names = train.class_names;
    return out;
  }

  std::vector<std::vector<int>> train_ids = IdsOf(train);
  std::vector<int> train_labels;
  for (const auto& e : train.examples) train_labels.push_back(e.label);
  const LabeledDataset& val = validation ? *validation : train;
  const std::vector<std::vector<int>> val_ids = IdsOf(val);
  std::vector<int> val_labels;
  for (const auto& e : val.examples) val_labels.push_back(e.label);
  const std::int64_t bs = plan.batch_size;

  BatchLossFn<T> loss_fn = [&](const TransformerModel<T>& m, Tape<T>* tape,
                               std::span<const std::size_t> idx,
                               std::mt19937_64& rng) {
    const auto seqs = Gather(train_ids, idx);
    std::vector<int> labels;
    for (std::size_t i : idx) labels.push_back(train_labels[i]);
    ForwardOptions opts;
    opts.training = true;
    opts.rng = &rng;
    const TokenBatch batch = TokenBatch::FromSequences(seqs, m.pad_id());
    Tensor<T> logits = m.ForwardClassify(tape, batch, opts);
    return CrossEntropy(tape, logits, std::span<const int>(labels), -1);
  };
  EvalFn<T> eval_fn = [&](const TransformerModel<T>& m) {
    LogitMatrix lm;
    lm.classes = classes;
    double loss_sum = 0.0;
    for (std::size_t first = 0; first < val_ids.size(); first += bs) {
      const std::size_t n = std::min<std::size_t>(bs, val_ids.size() - first);
      std::span<const std::vector<int>> chunk(val_ids.data() + first, n);
      const TokenBatch batch = TokenBatch::FromSequences(chunk, m.pad_id());
      Tensor<T> logits = m.ForwardClassify(nullptr, batch);
      std::span<const int> labels(val_labels.data() + first, n);
      loss_sum += static_cast<double>(
                      CrossEntropy<T>(nullptr, logits, labels, -1).item()) *
                  static_cast<double>(n);
      for (T v : logits.values()) lm.values.push_back(static_cast<double>(v));
      lm.rows += static_cast<std::int64_t>(n);
    }
    EvalMetrics em;
    em.loss = loss_sum / static_cast<double>(std::max<std::size_t>(1, val_ids.size()));
    em.top1 = TopKAccuracy(lm, val_labels, 1);
    em.top5 = TopKAccuracy(lm, val_labels, std::min(5, classes));
    return em;
  };
  const bool higher = plan.selection == SelectionMetric::kValidationAccuracy;
  LoopResult r = RunLoop(model, train_ids.size(), loss_fn, eval_fn, plan, higher,
                         reuse_head ? checkpoint.state.optimizer : std::nullopt);
  TrainOutcome out{Checkpoint::FromModel(model, checkpoint.dictionary()),
                   std::move(r.history)};
  out.history.truncated = train.truncated;
  out.history.degenerate = train.degenerate;
  out.checkpoint.class_names = train.class_names;
  out.checkpoint.state.task = "classify";
  out.checkpoint.state.epoch = static_cast<std::int64_t>(out.history.epochs.size());
  out.checkpoint.state.best_epoch = out.history.best_epoch;
  out.checkpoint.state.best_metric = out.history.best_metric;
  out.checkpoint.state.optimizer = r.optimizer;
  return out;
}

#define PRIMSKETCH_INSTANTIATE(T)                                              \
  template double LanguageModelLoss<T>(const TransformerModel<T>&,             \
                                       std::span<const std::vector<int>>,      \
                                       std::int64_t);                          \
  template TrainOutcome Pretrain<T>(const SketchCorpus&, const ModelConfig&,   \
                                    const PrimitiveDictionary&,                \
                                    const TrainPlan&, const SketchCorpus*);    \
  template TrainOutcome FinetuneCompletion<T>(                                 \
      const Checkpoint&, const SketchCorpus&, const TrainPlan&,                \
      const SketchCorpus*);                                                    \
  template TrainOutcome FinetuneClassify<T>(const Checkpoint&,                 \
                                            const LabeledDataset&,             \
                                            const LabeledDataset*,             \
                                            const TrainPlan&);

PRIMSKETCH_INSTANTIATE(float)
PRIMSKETCH_INSTANTIATE(double)

#undef PRIMSKETCH_INSTANTIATE

}  // namespace primsketch

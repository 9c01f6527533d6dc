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

#ifndef PRIMSKETCH_ADAM_H_
#define PRIMSKETCH_ADAM_H_

#include <cstdint>
#include <vector>

#include "primsketch/tensor.h"

namespace primsketch {

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Moment buffers are kept in double regardless of parameter precision.
struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

template <typename T>
class Adam {
 public:
  Adam(std::vector<Tensor<T>> params, AdamConfig config);

  // Bias-corrected update using `learning_rate` (the schedule lives with the
  // caller). Throws if a parameter has no gradient buffer.
  void Step(double learning_rate);
  void Step() { Step(state_.config.learning_rate); }

  // Allocates zeroed gradient buffers on every parameter.
  void ZeroGrad();

  const std::vector<Tensor<T>>& params() const { return params_; }
  const AdamState& state() const { return state_; }
  // Throws kShapeMismatch if buffer sizes disagree with the parameters.
  void RestoreState(AdamState state);

 private:
  std::vector<Tensor<T>> params_;
  AdamState state_;
};

// Rescales gradients in place so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
template <typename T>
double ClipGradNorm(std::vector<Tensor<T>>& params, double max_norm);

// Linear warmup over the first `warmup_steps`, constant afterwards.
double WarmupLearningRate(double base_lr, std::int64_t step,
                          std::int64_t warmup_steps);

}  // namespace primsketch

#endif  // PRIMSKETCH_ADAM_H_

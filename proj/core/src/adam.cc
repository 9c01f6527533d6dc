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

#include "primsketch/adam.h"

#include <cmath>

#include "primsketch/error.h"

namespace primsketch {

template <typename T>
Adam<T>::Adam(std::vector<Tensor<T>> params, AdamConfig config)
    : params_(std::move(params)) {
  state_.config = config;
  for (const Tensor<T>& p : params_) {
    state_.first_moment.emplace_back(p.numel(), 0.0);
    state_.second_moment.emplace_back(p.numel(), 0.0);
  }
}

template <typename T>
void Adam<T>::Step(double learning_rate) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i].has_grad()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "adam: missing grad on parameter " + std::to_string(i));
    }
  }
  ++state_.step;
  const AdamConfig& c = state_.config;
  const double bias1 = 1.0 - std::pow(c.beta1, static_cast<double>(state_.step));
  const double bias2 = 1.0 - std::pow(c.beta2, static_cast<double>(state_.step));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto value = params_[i].values();
    auto grad = std::span<const T>(params_[i].grad());
    auto& m = state_.first_moment[i];
    auto& v = state_.second_moment[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = static_cast<double>(grad[j]);
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g;
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g * g;
      const double m_hat = m[j] / bias1;
      const double v_hat = v[j] / bias2;
      value[j] -= static_cast<T>(learning_rate * m_hat /
                                 (std::sqrt(v_hat) + c.epsilon));
    }
  }
}

template <typename T>
void Adam<T>::ZeroGrad() {
  for (Tensor<T>& p : params_) p.ZeroGrad();
}

template <typename T>
void Adam<T>::RestoreState(AdamState state) {
  if (state.first_moment.size() != params_.size() ||
      state.second_moment.size() != params_.size()) {
    throw Error(ErrorKind::kShapeMismatch,
                "adam: state covers " + std::to_string(state.first_moment.size()) +
                    " tensors, optimizer has " + std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (state.first_moment[i].size() != params_[i].numel() ||
        state.second_moment[i].size() != params_[i].numel()) {
      throw Error(ErrorKind::kShapeMismatch,
                  "adam: moment buffer size mismatch on tensor " +
                      std::to_string(i));
    }
  }
  state_ = std::move(state);
}

template <typename T>
double ClipGradNorm(std::vector<Tensor<T>>& params, double max_norm) {
  double sq = 0.0;
  for (Tensor<T>& p : params) {
    if (!p.has_grad()) continue;
    for (T g : p.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const T factor = static_cast<T>(max_norm / norm);
    for (Tensor<T>& p : params) {
      if (!p.has_grad()) continue;
      for (T& g : p.grad()) g *= factor;
    }
  }
  return norm;
}

double WarmupLearningRate(double base_lr, std::int64_t step,
                          std::int64_t warmup_steps) {
  if (warmup_steps <= 0 || step >= warmup_steps) return base_lr;
  return base_lr * static_cast<double>(step + 1) /
         static_cast<double>(warmup_steps);
}

template class Adam<float>;
template class Adam<double>;
template double ClipGradNorm(std::vector<Tensor<float>>&, double);
template double ClipGradNorm(std::vector<Tensor<double>>&, double);

}  // namespace primsketch

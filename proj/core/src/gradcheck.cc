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

#include "primsketch/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "primsketch/error.h"

namespace primsketch {

GradCheckResult FiniteDifferenceCheck(
    const std::function<Tensor<double>(Tape<double>*)>& f,
    std::vector<Tensor<double>> inputs, const GradCheckOptions& options) {
  if (!(options.step > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "finite difference step must be > 0");
  }
  if (options.order != 2 && options.order != 4) {
    throw Error(ErrorKind::kInvalidArgument, "finite difference order must be 2 or 4");
  }
  for (Tensor<double>& t : inputs) {
    t.set_requires_grad(true);
    t.ZeroGrad();
  }
  Tape<double> tape;
  Tensor<double> loss = f(&tape);
  tape.Backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(inputs.size());
  for (const Tensor<double>& t : inputs) {
    analytic.emplace_back(t.grad().begin(), t.grad().end());
  }

  GradCheckResult result;
  const double h = options.step;
  for (std::size_t ti = 0; ti < inputs.size(); ++ti) {
    auto values = inputs[ti].values();
    const std::size_t n = values.size();
    std::size_t stride = 1;
    if (options.max_coords_per_tensor > 0 && n > options.max_coords_per_tensor) {
      stride = (n + options.max_coords_per_tensor - 1) / options.max_coords_per_tensor;
    }
    for (std::size_t i = 0; i < n; i += stride) {
      const double saved = values[i];
      auto at = [&](double offset) {
        values[i] = saved + offset;
        return f(nullptr).item();
      };
      double numeric = (at(h) - at(-h)) / (2.0 * h);
      if (options.order == 4) {
        numeric = (4.0 * numeric - (at(2.0 * h) - at(-2.0 * h)) / (4.0 * h)) / 3.0;
      }
      values[i] = saved;
      const double a = analytic[ti][i];
      const double abs_err = std::abs(a - numeric);
      const double denom =
          std::max({std::abs(a), std::abs(numeric), options.magnitude_floor});
      const double rel = abs_err / denom;
      ++result.coordinates_checked;
      result.max_absolute_error = std::max(result.max_absolute_error, abs_err);
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_tensor = ti;
        result.worst_index = i;
      }
    }
  }
  return result;
}

}  // namespace primsketch

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

#ifndef PRIMSKETCH_GRADCHECK_H_
#define PRIMSKETCH_GRADCHECK_H_

#include <cstddef>
#include <functional>
#include <vector>

#include "primsketch/tensor.h"

namespace primsketch {

struct GradCheckOptions {
  double step = 1e-5;
  // Denominator floor of the relative error, so coordinates whose true
  // gradient is ~0 are judged on absolute error instead.
  double magnitude_floor = 1e-6;
  // 0 checks every coordinate; otherwise an evenly strided subset per tensor.
  std::size_t max_coords_per_tensor = 0;
  // Central stencil accuracy: 2 uses (f(x+h) - f(x-h)) / 2h, 4 adds the
  // +-2h points for O(h^4) truncation error.
  int order = 2;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
  std::size_t coordinates_checked = 0;
};

// Compares tape gradients of a scalar function against central finite
// differences, coordinate by coordinate. `f` must rebuild its graph from the
// current values of `inputs` on every call; it receives a tape for the
// analytic pass and nullptr for the perturbed evaluations.
// Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor).
GradCheckResult FiniteDifferenceCheck(
    const std::function<Tensor<double>(Tape<double>*)>& f,
    std::vector<Tensor<double>> inputs, const GradCheckOptions& options = {});

}  // namespace primsketch

#endif  // PRIMSKETCH_GRADCHECK_H_

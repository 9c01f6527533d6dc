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

#include "primsketch/tensor.h"

#include <algorithm>
#include <sstream>

#include "primsketch/error.h"

namespace primsketch {

std::string ShapeString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::int64_t ShapeNumel(const Shape& shape) {
  std::int64_t n = 1;
  for (std::int64_t d : shape) n *= d;
  return n;
}

namespace {

void CheckShape(const Shape& shape) {
  if (shape.size() > 4) {
    throw Error(ErrorKind::kShapeMismatch,
                "tensor rank above 4: " + ShapeString(shape));
  }
  for (std::int64_t d : shape) {
    if (d < 0) {
      throw Error(ErrorKind::kShapeMismatch,
                  "negative extent in " + ShapeString(shape));
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> Tensor<T>::Zeros(Shape shape, bool requires_grad) {
  CheckShape(shape);
  Tensor t;
  t.storage_ = std::make_shared<TensorStorage<T>>();
  t.storage_->value.assign(static_cast<std::size_t>(ShapeNumel(shape)), T(0));
  t.storage_->shape = std::move(shape);
  t.storage_->requires_grad = requires_grad;
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::FromValues(Shape shape, std::vector<T> values,
                                bool requires_grad) {
  CheckShape(shape);
  if (static_cast<std::int64_t>(values.size()) != ShapeNumel(shape)) {
    throw Error(ErrorKind::kShapeMismatch,
                std::to_string(values.size()) + " values do not fill " +
                    ShapeString(shape));
  }
  Tensor t;
  t.storage_ = std::make_shared<TensorStorage<T>>();
  t.storage_->shape = std::move(shape);
  t.storage_->value.assign(values.begin(), values.end());
  t.storage_->requires_grad = requires_grad;
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::Scalar(T value, bool requires_grad) {
  return FromValues({}, {value}, requires_grad);
}

template <typename T>
std::int64_t Tensor<T>::dim(int axis) const {
  if (axis < 0) axis += rank();
  if (axis < 0 || axis >= rank()) {
    throw Error(ErrorKind::kShapeMismatch,
                "axis " + std::to_string(axis) + " out of range for " +
                    ShapeString(shape()));
  }
  return storage_->shape[axis];
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) {
    throw Error(ErrorKind::kShapeMismatch,
                "item() on non-scalar tensor " + ShapeString(shape()));
  }
  return storage_->value[0];
}

template <typename T>
std::span<T> Tensor<T>::grad() const {
  if (storage_->grad.size() != storage_->value.size()) {
    storage_->grad.assign(storage_->value.size(), T(0));
  }
  return storage_->grad;
}

template <typename T>
void Tensor<T>::ZeroGrad() const {
  storage_->grad.assign(storage_->value.size(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::Clone() const {
  Tensor t;
  t.storage_ = std::make_shared<TensorStorage<T>>(*storage_);
  return t;
}

template <typename T>
void Tape<T>::Record(const Tensor<T>& output, BackwardFn backward) {
  entries_.push_back({output, std::move(backward)});
}

template <typename T>
void Tape<T>::Backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw Error(ErrorKind::kShapeMismatch,
                "backward needs a scalar loss, got " +
                    (loss.defined() ? ShapeString(loss.shape()) : "undefined"));
  }
  const bool on_tape =
      std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) {
        return e.output.SharesStorageWith(loss);
      });
  if (!on_tape) {
    throw Error(ErrorKind::kInvalidArgument,
                "loss was not produced on this tape");
  }
  for (Entry& e : entries_) e.output.ZeroGrad();
  Tensor<T> seed = loss;
  seed.grad()[0] = T(1);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    it->backward();
  }
}

template class Tensor<float>;
template class Tensor<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace primsketch

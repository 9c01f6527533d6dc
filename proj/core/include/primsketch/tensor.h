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

#ifndef PRIMSKETCH_TENSOR_H_
#define PRIMSKETCH_TENSOR_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace primsketch {

using Shape = std::vector<std::int64_t>;

std::string ShapeString(const Shape& shape);
std::int64_t ShapeNumel(const Shape& shape);

// 64-byte aligned buffers keep vectorized kernels on the same code path for
// every allocation, so results do not depend on where malloc placed them.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t kAlignment = 64;

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(
        ::operator new(n * sizeof(T), std::align_val_t(kAlignment)));
  }
  void deallocate(T* p, std::size_t) {
    ::operator delete(p, std::align_val_t(kAlignment));
  }
  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

template <typename T>
struct TensorStorage {
  Shape shape;
  AlignedVector<T> value;
  AlignedVector<T> grad;  // empty until first requested
  bool requires_grad = false;
};

// Dense row-major tensor of rank <= 4. Copies of a Tensor are handles onto
// the same storage; use Clone() for a deep copy.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor Zeros(Shape shape, bool requires_grad = false);
  static Tensor FromValues(Shape shape, std::vector<T> values,
                           bool requires_grad = false);
  static Tensor Scalar(T value, bool requires_grad = false);

  bool defined() const { return storage_ != nullptr; }
  const Shape& shape() const { return storage_->shape; }
  int rank() const { return static_cast<int>(storage_->shape.size()); }
  std::int64_t dim(int axis) const;
  std::size_t numel() const { return storage_->value.size(); }

  std::span<T> values() { return storage_->value; }
  std::span<const T> values() const { return storage_->value; }
  T item() const;

  bool requires_grad() const { return storage_->requires_grad; }
  void set_requires_grad(bool on) { storage_->requires_grad = on; }

  bool has_grad() const { return !storage_->grad.empty(); }
  // Allocates a zero buffer on first use.
  // Handles are shallow, so const handles still reach (and lazily allocate)
  // the shared gradient buffer.
  std::span<T> grad() const;
  void ZeroGrad() const;

  Tensor Clone() const;
  bool SharesStorageWith(const Tensor& other) const {
    return storage_ == other.storage_;
  }

 private:
  std::shared_ptr<TensorStorage<T>> storage_;
};

// Ordered record of differentiable operations. Entries are appended in
// evaluation order, so replaying them backwards is a valid reverse
// topological traversal.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  void Record(const Tensor<T>& output, BackwardFn backward);
  std::size_t size() const { return entries_.size(); }
  void Clear() { entries_.clear(); }

  // Seeds d(loss)/d(loss) = 1 and runs every recorded backward function in
  // reverse. Intermediate gradients are reset first; leaf gradients
  // accumulate across calls until zeroed. Throws for a non-scalar loss or a
  // loss that was not produced on this tape.
  void Backward(const Tensor<T>& loss);

 private:
  struct Entry {
    Tensor<T> output;
    BackwardFn backward;
  };
  std::vector<Entry> entries_;
};

template <typename T>
void Backward(const Tensor<T>& loss, Tape<T>& tape) {
  tape.Backward(loss);
}

}  // namespace primsketch

#endif  // PRIMSKETCH_TENSOR_H_

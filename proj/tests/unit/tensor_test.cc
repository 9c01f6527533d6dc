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


#include <gtest/gtest.h>

#include "primsketch/error.h"
#include "primsketch/gradcheck.h"
#include "primsketch/ops.h"
#include "primsketch/tensor.h"

namespace primsketch {
namespace {

using T = Tensor<double>;

TEST(Tensor, ShapeAndValueCount) {
  const T z = T::Zeros({2, 3, 4});
  EXPECT_EQ(z.numel(), 24u);
  EXPECT_EQ(z.rank(), 3);
  EXPECT_EQ(z.dim(1), 3);
  EXPECT_EQ(ShapeString(z.shape()), "[2x3x4]");
  EXPECT_THROW(T::FromValues({2, 2}, {1, 2, 3}), Error);
  EXPECT_THROW(T::Zeros({1, 1, 1, 1, 1}), Error);
  EXPECT_THROW(T::Zeros({2, 2}).item(), Error);
  EXPECT_DOUBLE_EQ(T::Scalar(2.5).item(), 2.5);
}

TEST(Tensor, HandlesShareCloneDoesNot) {
  T a = T::FromValues({2}, {1, 2});
  T b = a;
  T c = a.Clone();
  b.values()[0] = 9;
  EXPECT_EQ(a.values()[0], 9);
  EXPECT_EQ(c.values()[0], 1);
  EXPECT_TRUE(a.SharesStorageWith(b));
  EXPECT_FALSE(a.SharesStorageWith(c));
}

TEST(Tensor, GradMatchesShapeOnDemand) {
  const T a = T::Zeros({3, 2}, true);
  EXPECT_FALSE(a.has_grad());
  EXPECT_EQ(a.grad().size(), 6u);
  EXPECT_TRUE(a.has_grad());
}

TEST(Backward, SumOfProductGivesOtherFactor) {
  T w = T::FromValues({4}, {0.5, -1, 2, 3}, true);
  const T x = T::FromValues({4}, {1, 2, 3, 4});
  Tape<double> tape;
  const T loss = Sum(&tape, Mul(&tape, w, x));
  Backward(loss, tape);
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(w.grad()[i], x.values()[i]);
  EXPECT_FALSE(x.has_grad());
}

TEST(Backward, GradientsAccumulateUntilZeroed) {
  T w = T::FromValues({3}, {0.2, 0.4, -0.7}, true);
  auto run = [&] {
    Tape<double> tape;
    const T loss = Sum(&tape, Gelu(&tape, Mul(&tape, w, w)));
    tape.Backward(loss);
  };
  run();
  const std::vector<double> once(w.grad().begin(), w.grad().end());
  run();
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(w.grad()[i], 2 * once[i]);
  w.ZeroGrad();
  run();
  for (int i = 0; i < 3; ++i) EXPECT_EQ(w.grad()[i], once[i]);
}

TEST(Backward, NonScalarOrForeignLossThrows) {
  T w = T::FromValues({2}, {1, 2}, true);
  Tape<double> tape;
  const T y = Mul(&tape, w, w);
  EXPECT_THROW(tape.Backward(y), Error);
  Tape<double> other;
  const T loss = Sum(&other, y);
  EXPECT_THROW(tape.Backward(loss), Error);
}

TEST(Backward, IndependentOfConstructionOrder) {
  const T a = T::FromValues({2, 2}, {0.1, -0.3, 0.7, 0.2}, true);
  const T b = T::FromValues({2, 2}, {1.1, 0.4, -0.5, 0.9}, true);
  auto grads = [&](bool swap) {
    a.ZeroGrad();
    b.ZeroGrad();
    Tape<double> tape;
    T left, right;
    if (swap) {
      right = Softmax(&tape, MatMul(&tape, b, a));
      left = Gelu(&tape, MatMul(&tape, a, b));
    } else {
      left = Gelu(&tape, MatMul(&tape, a, b));
      right = Softmax(&tape, MatMul(&tape, b, a));
    }
    tape.Backward(Sum(&tape, Mul(&tape, left, right)));
    std::vector<double> g(a.grad().begin(), a.grad().end());
    g.insert(g.end(), b.grad().begin(), b.grad().end());
    return g;
  };
  const auto g1 = grads(false), g2 = grads(true);
  for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_NEAR(g1[i], g2[i], 1e-15);
}

TEST(GradCheck, SquaredNormIsExact) {
  T x = T::FromValues({5}, {0.3, -1.2, 2.0, 0.0, 4.5});
  const auto f = [&](Tape<double>* tape) { return Sum(tape, Mul(tape, x, x)); };
  EXPECT_LE(FiniteDifferenceCheck(f, {x}).max_relative_error, 1e-8);
}

TEST(GradCheck, SoftmaxCrossEntropyComposite) {
  T logits = T::FromValues({3, 4}, {0.1, 2.0, -1.0, 0.5, 1.5, -0.2, 0.3, 0.0,
                                    -2.0, 0.4, 0.9, 1.1});
  T w = T::FromValues({4, 4}, {0.3, -0.1, 0.2, 0.5, 0.0, 0.7, -0.6, 0.1,
                               0.4, 0.2, 0.1, -0.3, -0.5, 0.3, 0.8, 0.2});
  const std::vector<int> targets{1, 3, 2};
  const auto f = [&](Tape<double>* tape) {
    return CrossEntropy(tape, MatMul(tape, logits, w), std::span<const int>(targets), -1);
  };
  EXPECT_LE(FiniteDifferenceCheck(f, {logits, w}).max_relative_error, 1e-4);
}

TEST(GradCheck, LargeStepInflatesReportedError) {
  T x = T::FromValues({3}, {0.4, -0.8, 1.3});
  const auto f = [&](Tape<double>* tape) { return Sum(tape, Gelu(tape, Mul(tape, x, x))); };
  GradCheckOptions small, large;
  large.step = 0.5;
  const double e_small = FiniteDifferenceCheck(f, {x}, small).max_relative_error;
  const double e_large = FiniteDifferenceCheck(f, {x}, large).max_relative_error;
  EXPECT_GT(e_large, 100 * e_small);
  EXPECT_GT(e_large, 1e-3);
}

TEST(GradCheck, FourthOrderStencilIsMoreAccurate) {
  T x = T::FromValues({3}, {0.4, -0.8, 1.3});
  const auto f = [&](Tape<double>* tape) { return Sum(tape, Gelu(tape, Mul(tape, x, x))); };
  GradCheckOptions second, fourth;
  second.step = fourth.step = 1e-2;
  fourth.order = 4;
  EXPECT_LT(FiniteDifferenceCheck(f, {x}, fourth).max_relative_error,
            0.01 * FiniteDifferenceCheck(f, {x}, second).max_relative_error);
  GradCheckOptions bad;
  bad.order = 3;
  EXPECT_THROW(FiniteDifferenceCheck(f, {x}, bad), Error);
  bad.order = 2;
  bad.step = 0;
  EXPECT_THROW(FiniteDifferenceCheck(f, {x}, bad), Error);
}

}  // namespace
}  // namespace primsketch

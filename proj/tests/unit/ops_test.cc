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

#include <cmath>
#include <limits>
#include <random>

#include "primsketch/error.h"
#include "primsketch/gradcheck.h"
#include "primsketch/ops.h"

namespace primsketch {
namespace {

using T = Tensor<double>;

T Random(Shape shape, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> v(ShapeNumel(shape));
  for (double& x : v) x = n(rng);
  return T::FromValues(std::move(shape), std::move(v));
}

double CheckGrad(const std::function<T(Tape<double>*)>& f, std::vector<T> in) {
  return FiniteDifferenceCheck(f, std::move(in)).max_relative_error;
}

// Weighted sum so every output coordinate carries a distinct gradient.
T Project(Tape<double>* tape, const T& y, std::uint64_t seed) {
  return Sum(tape, Mul(tape, y, Random(y.shape(), seed)));
}

TEST(MatMul, Examples) {
  const T a = T::FromValues({2, 2}, {1, 2, 3, 4});
  const T ones = T::FromValues({2, 1}, {1, 1});
  const T y = MatMul<double>(nullptr, a, ones);
  EXPECT_EQ(y.shape(), (Shape{2, 1}));
  EXPECT_DOUBLE_EQ(y.values()[0], 3);
  EXPECT_DOUBLE_EQ(y.values()[1], 7);
  const T eye = T::FromValues({2, 2}, {1, 0, 0, 1});
  const T same = MatMul<double>(nullptr, a, eye);
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(same.values()[i], a.values()[i]);
}

TEST(MatMul, ShapeMismatchNamesBothShapes) {
  try {
    MatMul<double>(nullptr, T::Zeros({2, 3}), T::Zeros({2, 3}));
    FAIL();
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_EQ(e.kind(), ErrorKind::kShapeMismatch);
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
  }
}

TEST(MatMul, GradientOracle) {
  T a = Random({3, 4}, 1), b = Random({4, 5}, 2), c = Random({5, 4}, 3);
  EXPECT_LE(CheckGrad([&](Tape<double>* t) { return Project(t, MatMul(t, a, b), 9); }, {a, b}), 1e-4);
  EXPECT_LE(CheckGrad([&](Tape<double>* t) { return Project(t, MatMulTransposed(t, a, c), 9); }, {a, c}), 1e-4);
}

TEST(Linear, MatchesMatMulPlusBiasAndGradients) {
  T x = Random({3, 4}, 4), w = Random({4, 2}, 5), b = Random({2}, 6);
  const T y = Linear<double>(nullptr, x, w, b);
  const T m = MatMul<double>(nullptr, x, w);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 2; ++c) {
      EXPECT_NEAR(y.values()[r * 2 + c], m.values()[r * 2 + c] + b.values()[c], 1e-14);
    }
  }
  EXPECT_LE(CheckGrad([&](Tape<double>* t) { return Project(t, Linear(t, x, w, b), 7); }, {x, w, b}), 1e-4);
  EXPECT_LE(CheckGrad([&](Tape<double>* t) { return Project(t, Linear(t, x, w, T()), 7); }, {x, w}), 1e-4);
}

TEST(Elementwise, GradientOracles) {
  T a = Random({2, 3}, 7), b = Random({2, 3}, 8);
  EXPECT_LE(CheckGrad([&](Tape<double>* t) { return Project(t, Add(t, a, b), 1); }, {a, b}), 1e-4);
  EXPECT_LE(CheckGrad([&](Tape<double>* t) { return Project(t, Mul(t, a, b), 1); }, {a, b}), 1e-4);
  EXPECT_LE(CheckGrad([&](Tape<double>* t) { return Project(t, Scale(t, a, -2.5), 1); }, {a}), 1e-4);
  EXPECT_LE(CheckGrad([&](Tape<double>* t) { return Project(t, Gelu(t, a), 1); }, {a}), 1e-4);
  EXPECT_THROW(Add<double>(nullptr, a, T::Zeros({3, 2})), Error);
}

TEST(Softmax, Examples) {
  const T y = Softmax<double>(nullptr, T::FromValues({2}, {0, 0}));
  EXPECT_DOUBLE_EQ(y.values()[0], 0.5);
  const T big = Softmax<double>(nullptr, T::FromValues({2}, {1000, 1000}));
  EXPECT_DOUBLE_EQ(big.values()[0], 0.5);
  EXPECT_DOUBLE_EQ(big.values()[1], 0.5);
}

TEST(Softmax, NormalizedShiftInvariantAndDifferentiable) {
  T x = Random({4, 6}, 9, 3.0);
  T shifted = x.Clone();
  for (double& v : shifted.values()) v += 17.25;
  const T y = Softmax<double>(nullptr, x), z = Softmax<double>(nullptr, shifted);
  for (int r = 0; r < 4; ++r) {
    double sum = 0;
    for (int c = 0; c < 6; ++c) {
      const double p = y.values()[r * 6 + c];
      EXPECT_GT(p, 0.0);
      EXPECT_LT(p, 1.0);
      EXPECT_NEAR(p, z.values()[r * 6 + c], 1e-9);
      sum += p;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  EXPECT_LE(CheckGrad([&](Tape<double>* t) { return Project(t, Softmax(t, x), 2); }, {x}), 1e-4);
}

TEST(LayerNorm, Examples) {
  const T gain = T::FromValues({4}, {1, 1, 1, 1});
  const T zero = T::Zeros({4});
  const T c = LayerNorm<double>(nullptr, T::FromValues({1, 4}, {3, 3, 3, 3}), gain, zero, 1e-5);
  for (double v : c.values()) EXPECT_DOUBLE_EQ(v, 0.0);
  const T bias = T::FromValues({4}, {0.5, -1, 2, 0.1});
  const T y = LayerNorm<double>(nullptr, Random({3, 4}, 3), gain, bias, 1e-5);
  const double bias_mean = (0.5 - 1 + 2 + 0.1) / 4;
  for (int r = 0; r < 3; ++r) {
    double m = 0;
    for (int k = 0; k < 4; ++k) m += y.values()[r * 4 + k];
    EXPECT_NEAR(m / 4, bias_mean, 1e-12);
  }
  EXPECT_THROW(LayerNorm<double>(nullptr, c, gain, zero, 0.0), Error);
}

TEST(LayerNorm, GradientOracle) {
  T x = Random({3, 5}, 10), g = Random({5}, 11), b = Random({5}, 12);
  EXPECT_LE(CheckGrad([&](Tape<double>* t) { return Project(t, LayerNorm(t, x, g, b, 1e-5), 3); }, {x, g, b}), 1e-4);
}

TEST(Gelu, ZeroAndOddPart) {
  const T y = Gelu<double>(nullptr, T::FromValues({3}, {0, 3, -3}));
  EXPECT_DOUBLE_EQ(y.values()[0], 0.0);
  EXPECT_NEAR(y.values()[1] - y.values()[2], 3.0, 1e-12);
}

TEST(Embedding, LookupAndScatter) {
  T table = Random({5, 3}, 13);
  const std::vector<int> ids{4, 0, 4};
  const T rows = Embedding<double>(nullptr, table, ids);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(rows.values()[k], table.values()[12 + k]);
    EXPECT_EQ(rows.values()[3 + k], table.values()[k]);
  }
  EXPECT_LE(CheckGrad([&](Tape<double>* t) { return Project(t, Embedding(t, table, std::span<const int>(ids)), 4); }, {table}), 1e-4);
  table.ZeroGrad();
  table.set_requires_grad(true);
  Tape<double> tape;
  tape.Backward(Sum(&tape, Embedding(&tape, table, std::span<const int>(ids))));
  EXPECT_EQ(table.grad()[12], 2.0);
  EXPECT_EQ(table.grad()[0], 1.0);
  EXPECT_EQ(table.grad()[3], 0.0);
  const std::vector<int> bad{5};
  EXPECT_THROW(Embedding<double>(nullptr, table, bad), Error);
}

TEST(GatherRows, SelectsAndScatters) {
  T x = Random({4, 2}, 14);
  const std::vector<std::int64_t> rows{3, 1};
  const T y = GatherRows<double>(nullptr, x, rows);
  EXPECT_EQ(y.values()[0], x.values()[6]);
  EXPECT_EQ(y.values()[3], x.values()[3]);
  EXPECT_LE(CheckGrad([&](Tape<double>* t) { return Project(t, GatherRows(t, x, std::span<const std::int64_t>(rows)), 5); }, {x}), 1e-4);
}

TEST(CrossEntropy, UniformLogitsGiveLogVocab) {
  const T logits = T::Zeros({3, 40});
  const std::vector<int> targets{1, 39, 7};
  EXPECT_NEAR(CrossEntropy<double>(nullptr, logits, targets, -1).item(), std::log(40.0), 1e-12);
  EXPECT_NEAR(std::log(40.0), 3.6889, 1e-4);
}

TEST(CrossEntropy, IgnoresTargetsAndValidates) {
  T logits = Random({3, 5}, 15);
  const std::vector<int> masked{2, 9, 4}, only{2, 4};
  const T two_rows = GatherRows<double>(nullptr, logits, std::vector<std::int64_t>{0, 2});
  EXPECT_NEAR(CrossEntropy<double>(nullptr, logits, masked, 9).item(),
              CrossEntropy<double>(nullptr, two_rows, only, 9).item(), 1e-14);
  try {
    CrossEntropy<double>(nullptr, logits, std::vector<int>{9, 9, 9}, 9);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("no contributing positions"), std::string::npos);
  }
  EXPECT_THROW(CrossEntropy<double>(nullptr, logits, std::vector<int>{0, 5, 1}, 9), Error);
  EXPECT_LE(CheckGrad([&](Tape<double>* t) { return CrossEntropy(t, logits, std::span<const int>(masked), 9); }, {logits}), 1e-4);
}

TEST(Dropout, IdentityAtZeroAndUnbiasedScaling) {
  std::mt19937_64 rng(1);
  const T x = T::FromValues({4}, {1, 2, 3, 4});
  const T same = Dropout<double>(nullptr, x, 0.0, rng);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(same.values()[i], x.values()[i]);
  const T ones = T::FromValues({20000}, std::vector<double>(20000, 1.0));
  const T d = Dropout<double>(nullptr, ones, 0.25, rng);
  double mean = 0;
  for (double v : d.values()) {
    EXPECT_TRUE(v == 0.0 || std::abs(v - 4.0 / 3.0) < 1e-12);
    mean += v;
  }
  EXPECT_NEAR(mean / 20000, 1.0, 0.03);
  EXPECT_THROW(Dropout<double>(nullptr, x, 1.0, rng), Error);
}

// Reference attention written straight from the definition, one query at a
// time, with explicit loops and no masking tricks.
std::vector<double> NaiveAttention(const T& q, const T& k, const T& v, int batch,
                                   int seq, int heads, const std::vector<std::uint8_t>& valid) {
  const int hidden = int(q.dim(1)), d = hidden / heads;
  std::vector<double> out(q.numel(), 0.0);
  for (int b = 0; b < batch; ++b) {
    for (int h = 0; h < heads; ++h) {
      for (int i = 0; i < seq; ++i) {
        std::vector<double> w;
        std::vector<int> keys;
        for (int j = 0; j <= i; ++j) {
          if (!valid[b * seq + j]) continue;
          double s = 0;
          for (int c = 0; c < d; ++c) {
            s += q.values()[(b * seq + i) * hidden + h * d + c] *
                 k.values()[(b * seq + j) * hidden + h * d + c];
          }
          w.push_back(s / std::sqrt(double(d)));
          keys.push_back(j);
        }
        if (keys.empty()) continue;
        double mx = -1e300, z = 0;
        for (double s : w) mx = std::max(mx, s);
        for (double& s : w) z += (s = std::exp(s - mx));
        for (std::size_t n = 0; n < keys.size(); ++n) {
          for (int c = 0; c < d; ++c) {
            out[(b * seq + i) * hidden + h * d + c] +=
                w[n] / z * v.values()[(b * seq + keys[n]) * hidden + h * d + c];
          }
        }
      }
    }
  }
  return out;
}

TEST(Attention, MatchesNaiveReference) {
  const int batch = 2, seq = 5, heads = 3, hidden = 12;
  const T q = Random({batch * seq, hidden}, 16), k = Random({batch * seq, hidden}, 17),
          v = Random({batch * seq, hidden}, 18);
  const std::vector<std::uint8_t> valid{1, 1, 1, 1, 1, 1, 1, 1, 0, 0};
  AttentionLayout layout{batch, seq, heads, valid};
  std::vector<double> probs;
  const T y = CausalSelfAttention<double>(nullptr, q, k, v, layout, &probs);
  const auto want = NaiveAttention(q, k, v, batch, seq, heads, valid);
  for (int b = 0; b < batch; ++b) {
    for (int i = 0; i < seq; ++i) {
      if (!valid[b * seq + i]) continue;
      for (int c = 0; c < hidden; ++c) {
        const std::size_t at = (b * seq + i) * hidden + c;
        EXPECT_NEAR(y.values()[at], want[at], 1e-12);
      }
    }
  }
  // Rows are distributions over permitted keys only.
  for (int b = 0; b < batch; ++b) {
    for (int h = 0; h < heads; ++h) {
      for (int i = 0; i < seq; ++i) {
        if (!valid[b * seq + i]) continue;
        double sum = 0;
        for (int j = 0; j < seq; ++j) {
          const double p = probs[((b * heads + h) * seq + i) * seq + j];
          if (j > i || !valid[b * seq + j]) EXPECT_EQ(p, 0.0);
          sum += p;
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
      }
    }
  }
}

TEST(Attention, TwoTokenHandComputed) {
  // One head, H = 2. q = k = v = x.
  const T x = T::FromValues({2, 2}, {1, 0, 0.5, 1});
  const std::vector<std::uint8_t> valid{1, 1};
  const T y = CausalSelfAttention<double>(nullptr, x, x, x, {1, 2, 1, valid});
  // Position 0 sees only itself.
  EXPECT_DOUBLE_EQ(y.values()[0], 1.0);
  EXPECT_DOUBLE_EQ(y.values()[1], 0.0);
  // Position 1: scores 0.5/sqrt2 and 1.25/sqrt2.
  const double s0 = 0.5 / std::sqrt(2.0), s1 = 1.25 / std::sqrt(2.0);
  const double w0 = std::exp(s0) / (std::exp(s0) + std::exp(s1)), w1 = 1 - w0;
  EXPECT_NEAR(y.values()[2], w0 * 1.0 + w1 * 0.5, 1e-12);
  EXPECT_NEAR(y.values()[3], w0 * 0.0 + w1 * 1.0, 1e-12);
}

TEST(Attention, GradientOracle) {
  const int batch = 2, seq = 4, heads = 2, hidden = 6;
  T q = Random({batch * seq, hidden}, 19), k = Random({batch * seq, hidden}, 20),
    v = Random({batch * seq, hidden}, 21);
  const std::vector<std::uint8_t> valid{1, 1, 1, 1, 1, 1, 1, 0};
  const auto f = [&](Tape<double>* t) {
    return Project(t, CausalSelfAttention(t, q, k, v, {batch, seq, heads, valid}), 6);
  };
  EXPECT_LE(CheckGrad(f, {q, k, v}), 1e-4);
}

TEST(Tracking, NoTapeMeansNoGrad) {
  T a = Random({2, 2}, 22);
  a.set_requires_grad(true);
  EXPECT_FALSE(MatMul<double>(nullptr, a, a).requires_grad());
  Tape<double> tape;
  EXPECT_TRUE(MatMul(&tape, a, a).requires_grad());
  EXPECT_EQ(tape.size(), 1u);
  const T c = Random({2, 2}, 23);
  EXPECT_FALSE(MatMul(&tape, c, c).requires_grad());
  EXPECT_EQ(tape.size(), 1u);
}

}  // namespace
}  // namespace primsketch

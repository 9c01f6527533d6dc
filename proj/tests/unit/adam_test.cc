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

#include "primsketch/adam.h"
#include "primsketch/error.h"
#include "primsketch/ops.h"

namespace primsketch {
namespace {

using T = Tensor<double>;

TEST(Adam, FirstStepMovesByLearningRate) {
  T p = T::Scalar(1.0, true);
  Adam<double> opt({p}, {.learning_rate = 0.1});
  opt.ZeroGrad();
  p.grad()[0] = 1.0;
  opt.Step();
  EXPECT_NEAR(p.item(), 0.9, 1e-6);
  EXPECT_EQ(opt.state().step, 1);
}

TEST(Adam, ZeroGradientIsIdentity) {
  T p = T::FromValues({3}, {0.5, -2.0, 7.0}, true);
  Adam<double> opt({p}, {});
  opt.ZeroGrad();
  for (int i = 0; i < 10; ++i) opt.Step();
  EXPECT_EQ(p.values()[0], 0.5);
  EXPECT_EQ(p.values()[1], -2.0);
  EXPECT_EQ(p.values()[2], 7.0);
}

TEST(Adam, MissingGradientThrows) {
  T p = T::Scalar(1.0, true);
  Adam<double> opt({p}, {});
  EXPECT_THROW(opt.Step(), Error);
}

// Independent bias-corrected Adam written out for one scalar.
TEST(Adam, MatchesScalarReference) {
  T p = T::Scalar(0.3, true);
  const AdamConfig cfg{.learning_rate = 0.05, .beta1 = 0.8, .beta2 = 0.95, .epsilon = 1e-6};
  Adam<double> opt({p}, cfg);
  double x = 0.3, m = 0, v = 0;
  for (int t = 1; t <= 20; ++t) {
    const double g = std::sin(t) + 2 * x;
    opt.ZeroGrad();
    p.grad()[0] = g;
    opt.Step();
    m = cfg.beta1 * m + (1 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1 - cfg.beta2) * g * g;
    const double mh = m / (1 - std::pow(cfg.beta1, t)), vh = v / (1 - std::pow(cfg.beta2, t));
    x -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.epsilon);
    EXPECT_NEAR(p.item(), x, 1e-12) << "step " << t;
  }
}

TEST(Adam, ConvergesOnQuadratic) {
  T p = T::Scalar(5.0, true);
  const T target = T::Scalar(-1.5);
  Adam<double> opt({p}, {.learning_rate = 0.05});
  int steps = 0;
  for (; steps < 500; ++steps) {
    opt.ZeroGrad();
    Tape<double> tape;
    const T diff = Add(&tape, p, Scale(&tape, target, -1.0));
    tape.Backward(Mul(&tape, diff, diff));
    opt.Step();
  }
  EXPECT_NEAR(p.item(), -1.5, 1e-3);
}

TEST(Adam, RestoreStateContinuesIdentically) {
  T a = T::FromValues({2}, {1, 2}, true), b = a.Clone();
  b.set_requires_grad(true);
  Adam<double> oa({a}, {}), ob({b}, {});
  for (int i = 0; i < 3; ++i) {
    oa.ZeroGrad();
    a.grad()[0] = 0.5 * i;
    a.grad()[1] = -1.0;
    oa.Step();
  }
  for (int i = 0; i < 2; ++i) b.values()[i] = a.values()[i];
  ob.RestoreState(oa.state());
  for (Adam<double>* o : {&oa, &ob}) {
    o->ZeroGrad();
    o->params()[0].grad()[0] = 0.25;
    o->params()[0].grad()[1] = 0.75;
    o->Step();
  }
  EXPECT_EQ(a.values()[0], b.values()[0]);
  EXPECT_EQ(a.values()[1], b.values()[1]);
  AdamState bad = oa.state();
  bad.first_moment[0].push_back(0);
  EXPECT_THROW(ob.RestoreState(bad), Error);
}

TEST(ClipGradNorm, RescalesOnlyAboveThreshold) {
  std::vector<T> ps{T::FromValues({2}, {0, 0}, true), T::FromValues({1}, {0}, true)};
  ps[0].grad()[0] = 3;
  ps[0].grad()[1] = 0;
  ps[1].grad()[0] = 4;
  EXPECT_DOUBLE_EQ(ClipGradNorm(ps, 1.0), 5.0);
  EXPECT_NEAR(ps[0].grad()[0], 0.6, 1e-12);
  EXPECT_NEAR(ps[1].grad()[0], 0.8, 1e-12);
  EXPECT_NEAR(ClipGradNorm(ps, 10.0), 1.0, 1e-12);
  EXPECT_NEAR(ps[1].grad()[0], 0.8, 1e-12);
}

TEST(Warmup, LinearThenConstant) {
  EXPECT_DOUBLE_EQ(WarmupLearningRate(1.0, 0, 4), 0.25);
  EXPECT_DOUBLE_EQ(WarmupLearningRate(1.0, 3, 4), 1.0);
  EXPECT_DOUBLE_EQ(WarmupLearningRate(1.0, 100, 4), 1.0);
  EXPECT_DOUBLE_EQ(WarmupLearningRate(0.5, 0, 0), 0.5);
}

}  // namespace
}  // namespace primsketch

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
#include <numbers>
#include <random>

#include "primsketch/error.h"
#include "primsketch/primitives.h"

namespace primsketch {
namespace {

constexpr double kPi = std::numbers::pi;

Vec2 AtAngle(double degrees, double length = 1.0) {
  const double r = degrees * kPi / 180.0;
  return {length * std::cos(r), length * std::sin(r)};
}

// Independent argmax over the dictionary, written directly from the
// definition rather than through MapStroke.
int BruteForceNearest(Vec2 s, int k) {
  int best = 0;
  double best_cos = -2.0;
  const double n = std::hypot(s.x, s.y);
  for (int j = 0; j < k; ++j) {
    const double a = 2.0 * kPi * j / k;
    const double c = (s.x * std::cos(a) + s.y * std::sin(a)) / n;
    if (c > best_cos + 1e-15) {
      best_cos = c;
      best = j;
    }
  }
  return best;
}

TEST(Dictionary, FourDirections) {
  const PrimitiveDictionary d(4, 0.05);
  const Vec2 want[] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (int j = 0; j < 4; ++j) {
    EXPECT_NEAR(d.at(j).direction.x, want[j].x, 1e-12);
    EXPECT_NEAR(d.at(j).direction.y, want[j].y, 1e-12);
    EXPECT_EQ(d.at(j).id, j);
  }
}

TEST(Dictionary, DefaultSpacingAndUnitNorm) {
  const PrimitiveDictionary d;
  ASSERT_EQ(d.orientation_count(), 36);
  for (const Primitive& p : d.primitives()) {
    EXPECT_NEAR(std::hypot(p.direction.x, p.direction.y), 1.0, 1e-9);
    EXPECT_DOUBLE_EQ(p.length, 0.05);
    const double angle = std::atan2(p.direction.y, p.direction.x);
    const double want = 2.0 * kPi * p.id / 36;
    EXPECT_NEAR(std::remainder(angle - want, 2 * kPi), 0.0, 1e-12);
  }
}

TEST(Dictionary, RejectsCoarseOrBadLength) {
  try {
    PrimitiveDictionary(3, 0.05);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("dictionary too coarse"), std::string::npos);
  }
  EXPECT_THROW(PrimitiveDictionary(8, 0.0), Error);
  EXPECT_THROW(PrimitiveDictionary().at(36), Error);
  EXPECT_THROW(PrimitiveDictionary().at(-1), Error);
}

TEST(Similarity, CosineExamples) {
  const PrimitiveDictionary d(4, 0.05);
  EXPECT_DOUBLE_EQ(Similarity({1, 0}, d.at(0)), 1.0);
  EXPECT_NEAR(Similarity({1, 0}, d.at(1)), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(Similarity({3, 0}, d.at(0)), 1.0);
  try {
    Similarity({0, 0}, d.at(0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("zero stroke"), std::string::npos);
  }
}

TEST(Similarity, ScaleInvariant) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1), a(1e-3, 1e3);
  const PrimitiveDictionary d;
  for (int i = 0; i < 1000; ++i) {
    const Vec2 s{u(rng), u(rng)};
    const double alpha = a(rng);
    const Primitive& p = d.at(int(rng() % 36));
    EXPECT_NEAR(Similarity({alpha * s.x, alpha * s.y}, p), Similarity(s, p), 1e-12);
    EXPECT_EQ(MapStroke({alpha * s.x, alpha * s.y}, d).id, MapStroke(s, d).id);
  }
}

TEST(MapStroke, Examples) {
  const PrimitiveDictionary d;
  EXPECT_EQ(MapStroke(AtAngle(12), d).id, 1);
  EXPECT_EQ(BruteForceNearest(AtAngle(12), 36), 1);
  EXPECT_EQ(MapStroke(AtAngle(15), d).id, 1);
  EXPECT_EQ(MapStroke({0, -1}, PrimitiveDictionary(4, 0.05)).id, 3);
}

TEST(MapStroke, MatchesBruteForceAndAngleBound) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k : {4, 7, 36, 64}) {
    const PrimitiveDictionary d(k, 0.05);
    for (int i = 0; i < 2000; ++i) {
      const Vec2 s{u(rng), u(rng)};
      if (std::hypot(s.x, s.y) < 1e-6) continue;
      const Primitive& p = MapStroke(s, d);
      EXPECT_EQ(p.id, BruteForceNearest(s, k));
      const double angle =
          std::acos(std::clamp(Similarity(s, p), -1.0, 1.0));
      EXPECT_LE(angle, kPi / k + 1e-9);
    }
  }
}

TEST(ScaleFactor, CeilingExamples) {
  const PrimitiveDictionary d;
  const Primitive& p = d.at(0);
  EXPECT_EQ(ScaleFactor({0.12, 0}, p), 3);
  EXPECT_EQ(ScaleFactor({0.05, 0}, p), 1);
  EXPECT_EQ(ScaleFactor({0.001, 0}, p), 1);
}

TEST(ScaleFactor, BracketsStrokeLength) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(1e-4, 2.0);
  const PrimitiveDictionary d;
  for (int i = 0; i < 5000; ++i) {
    const double m = u(rng);
    const int c = ScaleFactor({m, 0}, d.at(0));
    EXPECT_GE(c, 1);
    EXPECT_LE(m, c * 0.05 + 1e-12);
    EXPECT_GT(m, (c - 1) * 0.05 - 1e-12);
  }
}

Sketch Square(double side) {
  Sketch s;
  s.points = {{0, 0, 0}, {side, 0, 0}, {0, side, 0}, {-side, 0, 0}, {0, -side, 1}};
  return s;
}

TEST(Abstract, SquareRuns) {
  const PrimitiveDictionary d(4, 0.05);
  const AbstractedSketch a = Abstract(Square(0.2), d);
  ASSERT_EQ(a.runs.size(), 4u);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(a.runs[i].primitive_id, i);
    EXPECT_EQ(a.runs[i].repeat_count, 4);
    EXPECT_FALSE(a.runs[i].pen_up_move);
  }
}

TEST(Abstract, PenUpJumpIsFlaggedRun) {
  Sketch s;
  s.points = {{0, 0, 0}, {0.5, 0, 1}, {-0.5, 0.3, 0}, {0.5, 0, 1}};
  const AbstractedSketch a = Abstract(s, PrimitiveDictionary());
  ASSERT_EQ(a.runs.size(), 3u);
  EXPECT_FALSE(a.runs[0].pen_up_move);
  EXPECT_TRUE(a.runs[1].pen_up_move);
  EXPECT_FALSE(a.runs[2].pen_up_move);
}

TEST(Abstract, ZeroOffsetsDroppedAndDegenerateThrows) {
  Sketch s;
  s.points = {{0, 0, 0}, {0.1, 0, 0}, {0, 0, 0}, {0.1, 0, 1}};
  EXPECT_EQ(Abstract(s, PrimitiveDictionary()).runs.size(), 2u);
  Sketch zero;
  zero.points = {{0, 0, 1}};
  EXPECT_THROW(Abstract(zero, PrimitiveDictionary()), Error);
}

TEST(Reconstruct, ExactSquare) {
  const PrimitiveDictionary d(4, 0.05);
  const Sketch r = ReconstructUnnormalized(Abstract(Square(0.2), d), d);
  const Sketch sq = Square(0.2);
  ASSERT_EQ(r.points.size(), sq.points.size());
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    EXPECT_NEAR(r.points[i].dx, sq.points[i].dx, 1e-9);
    EXPECT_NEAR(r.points[i].dy, sq.points[i].dy, 1e-9);
    EXPECT_EQ(r.points[i].pen, sq.points[i].pen);
  }
  EXPECT_NO_THROW(Reconstruct(Abstract(Square(0.2), d), d));
}

TEST(Reconstruct, UnknownIdThrows) {
  AbstractedSketch a;
  a.runs = {{40, 1, false}};
  EXPECT_THROW(ReconstructUnnormalized(a, PrimitiveDictionary()), Error);
}

TEST(Reconstruct, PenUpTransitionsPreserved) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  const PrimitiveDictionary d;
  for (int trial = 0; trial < 200; ++trial) {
    Sketch s;
    s.points.push_back({0, 0, 0});
    const int n = 2 + trial % 25;
    for (int i = 0; i < n; ++i) {
      s.points.push_back({u(rng), u(rng), std::uint8_t(i + 1 == n || rng() % 4 == 0)});
    }
    const Sketch r = ReconstructUnnormalized(Abstract(s, d), d);
    auto count_up = [](const Sketch& k) {
      std::size_t c = 0;
      for (std::size_t i = 0; i + 1 < k.points.size(); ++i) c += k.points[i].pen;
      return c;
    };
    EXPECT_EQ(count_up(r), count_up(s));
  }
}

}  // namespace
}  // namespace primsketch

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

#include "primsketch/primitives.h"

#include <cmath>
#include <numbers>
#include <string>

#include "primsketch/error.h"

namespace primsketch {
namespace {

double Norm(Vec2 v) { return std::hypot(v.x, v.y); }

void RequireNonZero(Vec2 stroke) {
  if (!(Norm(stroke) > 0.0)) {
    throw Error(ErrorKind::kDegenerateGeometry, "zero stroke");
  }
}

}  // namespace

PrimitiveDictionary::PrimitiveDictionary(int orientation_count,
                                         double primitive_length)
    : length_(primitive_length) {
  if (orientation_count < 4) {
    throw Error(ErrorKind::kInvalidArgument,
                "dictionary too coarse: K=" + std::to_string(orientation_count) +
                    " < 4");
  }
  if (!(primitive_length > 0.0) || !std::isfinite(primitive_length)) {
    throw Error(ErrorKind::kInvalidArgument,
                "primitive length must be positive");
  }
  primitives_.reserve(orientation_count);
  for (int j = 0; j < orientation_count; ++j) {
    const double angle = 2.0 * std::numbers::pi * j / orientation_count;
    primitives_.push_back(
        {j, {std::cos(angle), std::sin(angle)}, primitive_length});
  }
}

const Primitive& PrimitiveDictionary::at(int id) const {
  if (id < 0 || id >= orientation_count()) {
    throw Error(ErrorKind::kInvalidArgument,
                "unknown primitive id " + std::to_string(id));
  }
  return primitives_[id];
}

double Similarity(Vec2 stroke, const Primitive& primitive) {
  RequireNonZero(stroke);
  const double dot =
      stroke.x * primitive.direction.x + stroke.y * primitive.direction.y;
  return dot / (Norm(stroke) * Norm(primitive.direction));
}

const Primitive& MapStroke(Vec2 stroke, const PrimitiveDictionary& dict) {
  RequireNonZero(stroke);
  const Primitive* best = &dict.primitives().front();
  double best_sim = Similarity(stroke, *best);
  for (const Primitive& p : dict.primitives()) {
    const double sim = Similarity(stroke, p);
    // Strict comparison keeps the lowest id on ties. A relative epsilon
    // absorbs cos/sin rounding so exact bisectors tie deterministically.
    if (sim > best_sim + 1e-12) {
      best_sim = sim;
      best = &p;
    }
  }
  return *best;
}

int ScaleFactor(Vec2 stroke, const Primitive& primitive) {
  RequireNonZero(stroke);
  const double ratio = Norm(stroke) / primitive.length;
  return std::max(1, static_cast<int>(std::ceil(ratio)));
}

AbstractedSketch Abstract(const Sketch& sketch,
                          const PrimitiveDictionary& dict) {
  AbstractedSketch out;
  for (std::size_t i = 1; i < sketch.points.size(); ++i) {
    const Stroke3Point& p = sketch.points[i];
    const Vec2 stroke{p.dx, p.dy};
    if (!(Norm(stroke) > 0.0)) continue;
    const Primitive& prim = MapStroke(stroke, dict);
    out.runs.push_back({prim.id, ScaleFactor(stroke, prim),
                        sketch.points[i - 1].pen == 1});
  }
  if (out.runs.empty()) {
    throw Error(ErrorKind::kDegenerateGeometry,
                "degenerate geometry: sketch has no non-zero strokes");
  }
  return out;
}

Sketch ReconstructUnnormalized(const AbstractedSketch& abstracted,
                               const PrimitiveDictionary& dict) {
  Sketch sketch;
  sketch.points.push_back({0.0, 0.0, 0});
  for (const PrimitiveRun& run : abstracted.runs) {
    const Primitive& prim = dict.at(run.primitive_id);
    if (run.pen_up_move) sketch.points.back().pen = 1;
    const double len = run.repeat_count * prim.length;
    sketch.points.push_back(
        {len * prim.direction.x, len * prim.direction.y, 0});
  }
  sketch.points.back().pen = 1;
  return sketch;
}

Sketch Reconstruct(const AbstractedSketch& abstracted,
                   const PrimitiveDictionary& dict) {
  return Normalize(ReconstructUnnormalized(abstracted, dict));
}

}  // namespace primsketch

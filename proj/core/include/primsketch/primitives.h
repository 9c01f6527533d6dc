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

#ifndef PRIMSKETCH_PRIMITIVES_H_
#define PRIMSKETCH_PRIMITIVES_H_

#include <cstdint>
#include <vector>

#include "primsketch/stroke_data.h"

namespace primsketch {

struct Primitive {
  int id = 0;
  Vec2 direction;  // unit length
  double length = 0.0;
};

// K fixed-length straight primitives at 2*pi/K orientation shifts, id j at
// angle 2*pi*j/K.
class PrimitiveDictionary {
 public:
  static constexpr int kDefaultOrientations = 36;
  static constexpr double kDefaultLength = 0.05;

  // Throws kInvalidArgument ("dictionary too coarse") when K < 4.
  PrimitiveDictionary(int orientation_count, double primitive_length);
  PrimitiveDictionary()
      : PrimitiveDictionary(kDefaultOrientations, kDefaultLength) {}

  int orientation_count() const { return static_cast<int>(primitives_.size()); }
  double primitive_length() const { return length_; }
  const std::vector<Primitive>& primitives() const { return primitives_; }
  // Throws kInvalidArgument for ids outside [0, K).
  const Primitive& at(int id) const;

  friend bool operator==(const PrimitiveDictionary& a,
                         const PrimitiveDictionary& b) {
    return a.orientation_count() == b.orientation_count() &&
           a.length_ == b.length_;
  }

 private:
  std::vector<Primitive> primitives_;
  double length_;
};

struct PrimitiveRun {
  int primitive_id = 0;
  int repeat_count = 1;
  bool pen_up_move = false;

  friend bool operator==(const PrimitiveRun&, const PrimitiveRun&) = default;
};

struct AbstractedSketch {
  std::vector<PrimitiveRun> runs;

  friend bool operator==(const AbstractedSketch&,
                         const AbstractedSketch&) = default;
};

// Cosine of the angle between a stroke vector and a primitive direction.
// Throws kDegenerateGeometry ("zero stroke") for a zero-length stroke.
double Similarity(Vec2 stroke, const Primitive& primitive);

// Most similar primitive; ties go to the lowest id.
const Primitive& MapStroke(Vec2 stroke, const PrimitiveDictionary& dict);

// ceil(|stroke| / primitive length), at least 1.
int ScaleFactor(Vec2 stroke, const Primitive& primitive);

// One run per non-zero stroke offset. The first point's offset only anchors
// the drawing and is not abstracted. Offsets following a pen=1 point become
// runs flagged pen_up_move. Throws kDegenerateGeometry if nothing remains.
AbstractedSketch Abstract(const Sketch& sketch, const PrimitiveDictionary& dict);

// Expands each run to count * length * direction and re-normalizes. Lossy
// inverse of Abstract; the drawing starts at the origin.
Sketch Reconstruct(const AbstractedSketch& abstracted,
                   const PrimitiveDictionary& dict);

// Reconstruct without the final normalization: offsets stay in the units of
// the sketch that was abstracted, which is what per-stroke error bounds are
// stated against.
Sketch ReconstructUnnormalized(const AbstractedSketch& abstracted,
                               const PrimitiveDictionary& dict);

}  // namespace primsketch

#endif  // PRIMSKETCH_PRIMITIVES_H_

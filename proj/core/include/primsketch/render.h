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

#ifndef PRIMSKETCH_RENDER_H_
#define PRIMSKETCH_RENDER_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "primsketch/primitives.h"
#include "primsketch/stroke_data.h"
#include "primsketch/tokenizer.h"

namespace primsketch {

// Points in [0,1]^2, drawn as one connected pen-down path. A single-point
// stroke is emitted as a zero-length segment so it still has two points.
struct Polyline {
  std::vector<Vec2> points;
};

struct Repair {
  std::size_t position = 0;  // token index the repair refers to
  std::string note;
};

struct SanitizedTokens {
  std::vector<int> ids;  // structurally valid: BOS ... EOS
  std::vector<Repair> repairs;
};

// Never throws for ids over any integer range. Adds a missing BOS, truncates
// at the first invalid token (unknown id, BOS after start, PAD before EOS),
// collapses repeated SEP, drops a dangling SEP and appends a missing EOS.
SanitizedTokens SanitizeTokens(std::span<const int> ids, const Vocabulary& vocab);

struct PolylineResult {
  std::vector<Polyline> polylines;
  std::vector<Repair> repairs;
};

// Integrates primitive vectors from (0.5, 0.5), splitting at pen-up runs,
// then re-centres and uniformly rescales into [0,1]^2. Strict mode throws
// TokenError on structural violations; tolerant mode repairs and reports.
PolylineResult TokensToPolylines(std::span<const int> ids,
                                 const PrimitiveDictionary& dict,
                                 const Vocabulary& vocab, bool tolerant);

// Polylines of an abstracted sketch (no token round trip).
std::vector<Polyline> AbstractedToPolylines(const AbstractedSketch& abstracted,
                                            const PrimitiveDictionary& dict);

// Polylines of a raw stroke-3 sketch, fitted into [0,1]^2.
std::vector<Polyline> SketchToPolylines(const Sketch& sketch);

struct SvgOptions {
  double stroke_width = 2.0;
  int canvas_px = 256;
  std::string stroke_color = "#000000";
};

// One <path> per polyline with round caps and joins. Throws for
// canvas_px < 16 or a non-positive stroke width.
std::string ToSvg(const std::vector<Polyline>& polylines,
                  const SvgOptions& options = {});

// 8-bit grayscale raster (255 background, 0 ink) by stamping discs of
// `line_width` pixels along each segment.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

GrayImage Rasterize(const std::vector<Polyline>& polylines, int canvas_px,
                    double line_width = 2.0);

// True when the library was built with PNG support.
bool PngSupported();
// Throws kUnavailable without PNG support.
std::string EncodePng(const GrayImage& image);
void WritePng(const GrayImage& image, const std::filesystem::path& path);

}  // namespace primsketch

#endif  // PRIMSKETCH_RENDER_H_

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

#ifndef PRIMSKETCH_STROKE_DATA_H_
#define PRIMSKETCH_STROKE_DATA_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace primsketch {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// One stroke-3 triple. `pen == 1` means the pen lifts after this point, so
// the offset stored on the following point is an in-air move.
struct Stroke3Point {
  double dx = 0.0;
  double dy = 0.0;
  std::uint8_t pen = 0;

  friend bool operator==(const Stroke3Point&, const Stroke3Point&) = default;
};

struct Sketch {
  std::vector<Stroke3Point> points;
  std::optional<std::string> label;

  friend bool operator==(const Sketch&, const Sketch&) = default;
};

enum class Split : std::uint8_t { kTrain = 0, kValidation = 1, kTest = 2 };

std::string_view SplitName(Split split);
Split ParseSplit(std::string_view name);

struct SketchCorpus {
  std::vector<Sketch> sketches;
  std::vector<std::string> class_names;
  Split split = Split::kTrain;

  // Index of `name` in class_names, or -1.
  int ClassIndex(std::string_view name) const;
  // Throws if a sketch label is missing from class_names.
  void Validate() const;

  friend bool operator==(const SketchCorpus&, const SketchCorpus&) = default;
};

// Cumulative positions; the first offset is taken from the origin.
std::vector<Vec2> ToAbsolute(std::span<const Stroke3Point> points);
// Inverse of ToAbsolute. `pens` must have the same length as `absolute`.
std::vector<Stroke3Point> FromAbsolute(std::span<const Vec2> absolute,
                                       std::span<const std::uint8_t> pens);

// Translates the bounding-box minimum to the origin and divides both axes by
// the larger of the two ranges, so angles are preserved and every cumulative
// coordinate ends up in [0, 1]. Throws kDegenerateGeometry when both ranges
// are zero.
Sketch Normalize(const Sketch& sketch);

struct ParseIssue {
  std::size_t line = 0;  // 1-based
  bool is_error = false;
  std::string message;
};

struct ParseResult {
  SketchCorpus corpus;
  std::vector<ParseIssue> issues;

  std::size_t error_count() const;
  std::size_t warning_count() const;
};

// Reads QuickDraw "simplified drawing" ndjson: one object per line with
// "word" and "drawing" = [[xs, ys], ...]. Malformed lines are recorded as
// errors and skipped; empty drawings are skipped with a warning. The
// resulting class list is sorted alphabetically.
ParseResult ParseQuickDrawNdjson(std::istream& in);
ParseResult ParseQuickDrawNdjsonFile(const std::filesystem::path& path);

// Converts one drawing (list of strokes, each a list of absolute points) to
// stroke-3 form. Returns nullopt for an empty drawing.
std::optional<Sketch> DrawingToSketch(
    const std::vector<std::vector<Vec2>>& strokes);

// Shapes understood by Synthesize. The first four are the canonical fixture
// shapes; the rest widen the synthetic class catalog.
const std::vector<std::string>& SyntheticShapeKinds();

// Deterministic, normalized fixture sketch. `jitter` is the standard
// deviation of Gaussian vertex noise in normalized units.
Sketch Synthesize(std::string_view shape, double jitter, std::uint64_t seed);

struct SyntheticVariation {
  double jitter = 0.01;
  double max_rotation = 0.35;    // radians
  double max_log_aspect = 0.25;  // |log(sx/sy)| bound
  double subdivision_prob = 0.3; // chance to split an edge into two strokes
};

// Like Synthesize but with random rotation, aspect and edge subdivision, for
// building classification corpora.
Sketch SynthesizeVariant(std::string_view shape,
                         const SyntheticVariation& variation,
                         std::uint64_t seed);

// `per_class` variants of every listed shape, labelled by shape name.
SketchCorpus SynthesizeCorpus(const std::vector<std::string>& shapes,
                              std::size_t per_class, std::uint64_t seed,
                              const SyntheticVariation& variation = {},
                              Split split = Split::kTrain);

inline constexpr std::uint32_t kCorpusFormatVersion = 1;

// Binary record file at `path` plus a JSON sidecar `<path>.json` holding the
// class names. See docs/formats.md for the byte layout.
void SaveCorpus(const SketchCorpus& corpus, const std::filesystem::path& path);
SketchCorpus LoadCorpus(const std::filesystem::path& path);

// In-memory forms used by the file functions.
std::string SerializeCorpusRecords(const SketchCorpus& corpus);
SketchCorpus DeserializeCorpusRecords(std::string_view bytes,
                                      std::vector<std::string> class_names);

// Seed-stable split of a corpus into (train, validation).
std::pair<SketchCorpus, SketchCorpus> SplitCorpus(const SketchCorpus& corpus,
                                                  double validation_fraction,
                                                  std::uint64_t seed);

// Keeps only sketches whose label is in `classes`, re-indexing class_names to
// `classes` order.
SketchCorpus FilterClasses(const SketchCorpus& corpus,
                           const std::vector<std::string>& classes);

// SplitMix64 step; used to derive independent seeds.
std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream);

}  // namespace primsketch

#endif  // PRIMSKETCH_STROKE_DATA_H_

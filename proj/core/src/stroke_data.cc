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

#include "primsketch/stroke_data.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "primsketch/binary_io.h"
#include "primsketch/error.h"

namespace primsketch {
namespace {

using json = nlohmann::json;
using Strokes = std::vector<std::vector<Vec2>>;

constexpr char kCorpusMagic[4] = {'P', 'S', 'K', 'D'};

std::vector<Vec2> RegularPolygon(int sides, double start_angle) {
  std::vector<Vec2> pts;
  for (int i = 0; i <= sides; ++i) {
    double a = start_angle + 2.0 * std::numbers::pi * i / sides;
    pts.push_back({0.5 + 0.5 * std::cos(a), 0.5 + 0.5 * std::sin(a)});
  }
  return pts;
}

Strokes ShapeStrokes(std::string_view shape) {
  constexpr double pi = std::numbers::pi;
  if (shape == "square") {
    return {{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}}};
  }
  if (shape == "triangle") {
    return {{{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2}, {0, 0}}};
  }
  if (shape == "circle") {
    return {RegularPolygon(16, 0.0)};
  }
  if (shape == "zigzag") {
    return {{{0, 0}, {0.2, 1}, {0.4, 0}, {0.6, 1}, {0.8, 0}, {1, 1}}};
  }
  if (shape == "pentagon") {
    return {RegularPolygon(5, pi / 2)};
  }
  if (shape == "hexagon") {
    return {RegularPolygon(6, 0.0)};
  }
  if (shape == "star") {
    std::vector<Vec2> pts;
    for (int i = 0; i <= 5; ++i) {
      double a = pi / 2 + 4.0 * pi * i / 5;
      pts.push_back({0.5 + 0.5 * std::cos(a), 0.5 + 0.5 * std::sin(a)});
    }
    return {pts};
  }
  if (shape == "cross") {
    return {{{0.5, 0}, {0.5, 1}}, {{0, 0.5}, {1, 0.5}}};
  }
  if (shape == "spiral") {
    std::vector<Vec2> pts;
    for (int i = 0; i <= 24; ++i) {
      double t = static_cast<double>(i) / 24;
      double a = 4.0 * pi * t;
      pts.push_back({0.5 + 0.5 * t * std::cos(a), 0.5 + 0.5 * t * std::sin(a)});
    }
    return {pts};
  }
  if (shape == "house") {
    return {{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}},
            {{0, 1}, {0.5, 1.6}, {1, 1}}};
  }
  if (shape == "arrow") {
    return {{{0, 0.5}, {1, 0.5}}, {{0.75, 0.75}, {1, 0.5}, {0.75, 0.25}}};
  }
  if (shape == "wave") {
    std::vector<Vec2> pts;
    for (int i = 0; i <= 20; ++i) {
      double t = static_cast<double>(i) / 20;
      pts.push_back({t, 0.5 + 0.25 * std::sin(3.0 * pi * t)});
    }
    return {pts};
  }
  if (shape == "ladder") {
    return {{{0, 0}, {0, 1}},
            {{0.5, 0}, {0.5, 1}},
            {{0, 0.25}, {0.5, 0.25}},
            {{0, 0.5}, {0.5, 0.5}},
            {{0, 0.75}, {0.5, 0.75}}};
  }
  if (shape == "diamond") {
    return {{{0.5, 0}, {1, 0.5}, {0.5, 1}, {0, 0.5}, {0.5, 0}}};
  }
  if (shape == "envelope") {
    return {{{0, 0}, {1, 0}, {1, 0.6}, {0, 0.6}, {0, 0}},
            {{0, 0.6}, {0.5, 0.25}, {1, 0.6}}};
  }
  if (shape == "lightning") {
    return {{{0.6, 1}, {0.3, 0.5}, {0.6, 0.5}, {0.3, 0}}};
  }
  throw Error(ErrorKind::kInvalidArgument,
              "unknown shape kind '" + std::string(shape) + "'");
}

double UniformUnit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double Gaussian(std::mt19937_64& rng) {
  // Box-Muller on our own uniforms so the stream is identical across
  // standard library implementations.
  double u1 = UniformUnit(rng);
  double u2 = UniformUnit(rng);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void AddJitter(Strokes& strokes, double jitter, std::mt19937_64& rng) {
  if (jitter <= 0.0) return;
  for (auto& stroke : strokes) {
    for (auto& p : stroke) {
      p.x += jitter * Gaussian(rng);
      p.y += jitter * Gaussian(rng);
    }
  }
}

Sketch StrokesToNormalizedSketch(const Strokes& strokes,
                                 std::string_view label) {
  std::optional<Sketch> sketch = DrawingToSketch(strokes);
  if (!sketch) {
    throw Error(ErrorKind::kDegenerateGeometry, "empty synthetic drawing");
  }
  sketch->label = std::string(label);
  return Normalize(*sketch);
}

}  // namespace

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kValidation:
      return "validation";
    case Split::kTest:
      return "test";
  }
  return "train";
}

Split ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation") return Split::kValidation;
  if (name == "test") return Split::kTest;
  throw Error(ErrorKind::kInvalidArgument,
              "unknown split '" + std::string(name) + "'");
}

int SketchCorpus::ClassIndex(std::string_view name) const {
  auto it = std::find(class_names.begin(), class_names.end(), name);
  return it == class_names.end()
             ? -1
             : static_cast<int>(std::distance(class_names.begin(), it));
}

void SketchCorpus::Validate() const {
  for (std::size_t i = 0; i < sketches.size(); ++i) {
    const Sketch& s = sketches[i];
    if (s.label && ClassIndex(*s.label) < 0) {
      throw Error(ErrorKind::kInvalidArgument,
                  "sketch " + std::to_string(i) + " has label '" + *s.label +
                      "' not present in class_names");
    }
  }
}

std::vector<Vec2> ToAbsolute(std::span<const Stroke3Point> points) {
  std::vector<Vec2> out;
  out.reserve(points.size());
  Vec2 pos;
  for (const Stroke3Point& p : points) {
    pos.x += p.dx;
    pos.y += p.dy;
    out.push_back(pos);
  }
  return out;
}

std::vector<Stroke3Point> FromAbsolute(std::span<const Vec2> absolute,
                                       std::span<const std::uint8_t> pens) {
  if (absolute.size() != pens.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "FromAbsolute: point/pen count mismatch");
  }
  std::vector<Stroke3Point> out;
  out.reserve(absolute.size());
  Vec2 prev;
  for (std::size_t i = 0; i < absolute.size(); ++i) {
    out.push_back({absolute[i].x - prev.x, absolute[i].y - prev.y, pens[i]});
    prev = absolute[i];
  }
  return out;
}

Sketch Normalize(const Sketch& sketch) {
  if (sketch.points.empty()) {
    throw Error(ErrorKind::kDegenerateGeometry,
                "degenerate geometry: empty sketch");
  }
  std::vector<Vec2> abs = ToAbsolute(sketch.points);
  double min_x = abs[0].x, max_x = abs[0].x;
  double min_y = abs[0].y, max_y = abs[0].y;
  for (const Vec2& p : abs) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const double scale = std::max(max_x - min_x, max_y - min_y);
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorKind::kDegenerateGeometry,
                "degenerate geometry: all points coincide");
  }
  for (Vec2& p : abs) {
    // Clamp guards the last ulp so the [0, 1] invariant holds exactly.
    p.x = std::clamp((p.x - min_x) / scale, 0.0, 1.0);
    p.y = std::clamp((p.y - min_y) / scale, 0.0, 1.0);
  }
  std::vector<std::uint8_t> pens;
  pens.reserve(sketch.points.size());
  for (const Stroke3Point& p : sketch.points) pens.push_back(p.pen);
  Sketch out;
  out.points = FromAbsolute(abs, pens);
  out.label = sketch.label;
  return out;
}

std::size_t ParseResult::error_count() const {
  return static_cast<std::size_t>(std::count_if(
      issues.begin(), issues.end(), [](const ParseIssue& i) { return i.is_error; }));
}

std::size_t ParseResult::warning_count() const {
  return issues.size() - error_count();
}

std::optional<Sketch> DrawingToSketch(const Strokes& strokes) {
  Sketch sketch;
  bool have_origin = false;
  Vec2 prev;
  for (const auto& stroke : strokes) {
    for (std::size_t i = 0; i < stroke.size(); ++i) {
      const Vec2& p = stroke[i];
      if (!have_origin) {
        prev = p;
        have_origin = true;
      }
      const std::uint8_t pen = (i + 1 == stroke.size()) ? 1 : 0;
      sketch.points.push_back({p.x - prev.x, p.y - prev.y, pen});
      prev = p;
    }
  }
  if (sketch.points.empty()) return std::nullopt;
  return sketch;
}

ParseResult ParseQuickDrawNdjson(std::istream& in) {
  ParseResult result;
  std::map<std::string, int> seen_classes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json record = json::parse(line);
      if (!record.is_object()) throw Error(ErrorKind::kParse, "not an object");
      if (!record.contains("word") || !record["word"].is_string()) {
        throw Error(ErrorKind::kParse, "missing string field \"word\"");
      }
      if (!record.contains("drawing") || !record["drawing"].is_array()) {
        throw Error(ErrorKind::kParse, "missing array field \"drawing\"");
      }
      Strokes strokes;
      for (const json& stroke : record["drawing"]) {
        if (!stroke.is_array() || stroke.size() < 2 || !stroke[0].is_array() ||
            !stroke[1].is_array() || stroke[0].size() != stroke[1].size()) {
          throw Error(ErrorKind::kParse,
                      "stroke must be [xs, ys] with equal lengths");
        }
        std::vector<Vec2> pts;
        for (std::size_t i = 0; i < stroke[0].size(); ++i) {
          if (!stroke[0][i].is_number() || !stroke[1][i].is_number()) {
            throw Error(ErrorKind::kParse, "non-numeric coordinate");
          }
          pts.push_back({stroke[0][i].get<double>(), stroke[1][i].get<double>()});
        }
        if (!pts.empty()) strokes.push_back(std::move(pts));
      }
      std::optional<Sketch> sketch = DrawingToSketch(strokes);
      if (!sketch) {
        result.issues.push_back({line_no, false, "empty drawing skipped"});
        continue;
      }
      sketch->label = record["word"].get<std::string>();
      seen_classes.emplace(*sketch->label, 0);
      result.corpus.sketches.push_back(std::move(*sketch));
    } catch (const json::exception& e) {
      result.issues.push_back({line_no, true, e.what()});
    } catch (const Error& e) {
      result.issues.push_back({line_no, true, e.what()});
    }
  }
  for (const auto& [name, unused] : seen_classes) {
    result.corpus.class_names.push_back(name);
  }
  return result;
}

ParseResult ParseQuickDrawNdjsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return ParseQuickDrawNdjson(in);
}

const std::vector<std::string>& SyntheticShapeKinds() {
  static const std::vector<std::string> kinds = {
      "square", "triangle", "circle",  "zigzag",   "pentagon", "hexagon",
      "star",   "cross",    "spiral",  "house",    "arrow",    "wave",
      "ladder", "diamond",  "envelope", "lightning"};
  return kinds;
}

Sketch Synthesize(std::string_view shape, double jitter, std::uint64_t seed) {
  if (!(jitter >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "jitter must be non-negative");
  }
  Strokes strokes = ShapeStrokes(shape);
  std::mt19937_64 rng(seed);
  AddJitter(strokes, jitter, rng);
  return StrokesToNormalizedSketch(strokes, shape);
}

Sketch SynthesizeVariant(std::string_view shape,
                         const SyntheticVariation& variation,
                         std::uint64_t seed) {
  Strokes strokes = ShapeStrokes(shape);
  std::mt19937_64 rng(seed);
  const double angle = (2.0 * UniformUnit(rng) - 1.0) * variation.max_rotation;
  const double log_aspect =
      (2.0 * UniformUnit(rng) - 1.0) * variation.max_log_aspect;
  const double sx = std::exp(0.5 * log_aspect);
  const double sy = std::exp(-0.5 * log_aspect);
  const double c = std::cos(angle), s = std::sin(angle);

  Strokes out;
  for (const auto& stroke : strokes) {
    std::vector<Vec2> pts;
    for (std::size_t i = 0; i < stroke.size(); ++i) {
      if (i > 0 && UniformUnit(rng) < variation.subdivision_prob) {
        const double t = 0.3 + 0.4 * UniformUnit(rng);
        const Vec2& a = stroke[i - 1];
        const Vec2& b = stroke[i];
        pts.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
      }
      pts.push_back(stroke[i]);
    }
    for (Vec2& p : pts) {
      const double x = (p.x - 0.5) * sx, y = (p.y - 0.5) * sy;
      p = {c * x - s * y, s * x + c * y};
    }
    out.push_back(std::move(pts));
  }
  AddJitter(out, variation.jitter, rng);
  return StrokesToNormalizedSketch(out, shape);
}

SketchCorpus SynthesizeCorpus(const std::vector<std::string>& shapes,
                              std::size_t per_class, std::uint64_t seed,
                              const SyntheticVariation& variation,
                              Split split) {
  SketchCorpus corpus;
  corpus.class_names = shapes;
  corpus.split = split;
  corpus.sketches.reserve(shapes.size() * per_class);
  for (std::size_t i = 0; i < per_class; ++i) {
    for (std::size_t c = 0; c < shapes.size(); ++c) {
      const std::uint64_t s = MixSeed(seed, i * shapes.size() + c);
      corpus.sketches.push_back(SynthesizeVariant(shapes[c], variation, s));
    }
  }
  return corpus;
}

std::string SerializeCorpusRecords(const SketchCorpus& corpus) {
  corpus.Validate();
  ByteWriter w;
  w.PutBytes(std::string_view(kCorpusMagic, 4));
  w.Put<std::uint32_t>(kCorpusFormatVersion);
  w.Put<std::uint8_t>(static_cast<std::uint8_t>(corpus.split));
  w.Put<std::uint8_t>(0);
  w.Put<std::uint16_t>(0);
  w.Put<std::uint32_t>(static_cast<std::uint32_t>(corpus.class_names.size()));
  w.Put<std::uint64_t>(corpus.sketches.size());
  for (const Sketch& s : corpus.sketches) {
    const std::uint32_t body = 4 + 4 + 17 * static_cast<std::uint32_t>(s.points.size());
    w.Put<std::uint32_t>(body);
    w.Put<std::int32_t>(s.label ? corpus.ClassIndex(*s.label) : -1);
    w.Put<std::uint32_t>(static_cast<std::uint32_t>(s.points.size()));
    for (const Stroke3Point& p : s.points) {
      w.Put<double>(p.dx);
      w.Put<double>(p.dy);
      w.Put<std::uint8_t>(p.pen);
    }
  }
  return w.Take();
}

SketchCorpus DeserializeCorpusRecords(std::string_view bytes,
                                      std::vector<std::string> class_names) {
  ByteReader r(bytes, "corpus");
  std::string_view magic = r.GetBytes(4);
  if (magic != std::string_view(kCorpusMagic, 4)) {
    throw Error(ErrorKind::kFormat, "corpus: bad magic bytes");
  }
  const auto version = r.Get<std::uint32_t>();
  if (version != kCorpusFormatVersion) {
    throw Error(ErrorKind::kFormat,
                "corpus: format version " + std::to_string(version) +
                    " detected, expected " +
                    std::to_string(kCorpusFormatVersion));
  }
  const auto split = r.Get<std::uint8_t>();
  if (split > 2) throw Error(ErrorKind::kFormat, "corpus: bad split tag");
  r.Get<std::uint8_t>();
  r.Get<std::uint16_t>();
  const auto class_count = r.Get<std::uint32_t>();
  if (class_count != class_names.size()) {
    throw Error(ErrorKind::kFormat,
                "corpus: header lists " + std::to_string(class_count) +
                    " classes but sidecar has " +
                    std::to_string(class_names.size()));
  }
  const auto count = r.Get<std::uint64_t>();
  SketchCorpus corpus;
  corpus.split = static_cast<Split>(split);
  corpus.class_names = std::move(class_names);
  // Records are at least 8 bytes; reject absurd counts before reserving.
  if (count > r.remaining() / 8 + 1) {
    throw Error(ErrorKind::kFormat, "corpus: record count exceeds file size");
  }
  corpus.sketches.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto body = r.Get<std::uint32_t>();
    ByteReader rec(r.GetBytes(body), "corpus record");
    Sketch s;
    const auto label = rec.Get<std::int32_t>();
    if (label >= 0) {
      if (static_cast<std::size_t>(label) >= corpus.class_names.size()) {
        throw Error(ErrorKind::kFormat, "corpus: label index out of range");
      }
      s.label = corpus.class_names[label];
    }
    const auto n = rec.Get<std::uint32_t>();
    if (body != 8 + 17ull * n) {
      throw Error(ErrorKind::kFormat, "corpus: record length mismatch");
    }
    s.points.resize(n);
    for (Stroke3Point& p : s.points) {
      p.dx = rec.Get<double>();
      p.dy = rec.Get<double>();
      p.pen = rec.Get<std::uint8_t>();
    }
    corpus.sketches.push_back(std::move(s));
  }
  if (!r.done()) {
    throw Error(ErrorKind::kFormat, "corpus: trailing bytes after last record");
  }
  return corpus;
}

void SaveCorpus(const SketchCorpus& corpus, const std::filesystem::path& path) {
  const std::string records = SerializeCorpusRecords(corpus);
  json meta = {{"format_version", kCorpusFormatVersion},
               {"class_names", corpus.class_names},
               {"split", SplitName(corpus.split)},
               {"count", corpus.sketches.size()}};
  std::filesystem::path sidecar = path;
  sidecar += ".json";
  WriteFileBytes(sidecar, meta.dump(2) + "\n");
  WriteFileBytes(path, records);
}

SketchCorpus LoadCorpus(const std::filesystem::path& path) {
  std::filesystem::path sidecar = path;
  sidecar += ".json";
  json meta;
  try {
    meta = json::parse(ReadFileBytes(sidecar));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormat,
                "corpus sidecar " + sidecar.string() + ": " + e.what());
  }
  const auto version = meta.value("format_version", 0u);
  if (version != kCorpusFormatVersion) {
    throw Error(ErrorKind::kFormat,
                "corpus sidecar: format version " + std::to_string(version) +
                    " detected, expected " +
                    std::to_string(kCorpusFormatVersion));
  }
  std::vector<std::string> names;
  try {
    names = meta.at("class_names").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("corpus sidecar: ") + e.what());
  }
  SketchCorpus corpus =
      DeserializeCorpusRecords(ReadFileBytes(path), std::move(names));
  if (meta.contains("count") &&
      meta["count"].get<std::uint64_t>() != corpus.sketches.size()) {
    throw Error(ErrorKind::kFormat, "corpus: sidecar count disagrees with records");
  }
  return corpus;
}

std::pair<SketchCorpus, SketchCorpus> SplitCorpus(const SketchCorpus& corpus,
                                                  double validation_fraction,
                                                  std::uint64_t seed) {
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "validation fraction must lie in [0, 1)");
  }
  // Stratified by label so every class is represented in both halves.
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < corpus.sketches.size(); ++i) {
    const auto& label = corpus.sketches[i].label;
    by_class[label ? corpus.ClassIndex(*label) : -1].push_back(i);
  }
  std::vector<bool> is_val(corpus.sketches.size(), false);
  std::mt19937_64 rng(seed);
  for (auto& [label, members] : by_class) {
    for (std::size_t i = members.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(members[i - 1], members[j]);
    }
    const auto n_val = static_cast<std::size_t>(
        std::llround(validation_fraction * static_cast<double>(members.size())));
    for (std::size_t k = 0; k < n_val; ++k) is_val[members[k]] = true;
  }
  SketchCorpus train, val;
  train.class_names = val.class_names = corpus.class_names;
  train.split = corpus.split;
  val.split = Split::kValidation;
  for (std::size_t i = 0; i < corpus.sketches.size(); ++i) {
    (is_val[i] ? val : train).sketches.push_back(corpus.sketches[i]);
  }
  return {std::move(train), std::move(val)};
}

SketchCorpus FilterClasses(const SketchCorpus& corpus,
                           const std::vector<std::string>& classes) {
  SketchCorpus out;
  out.class_names = classes;
  out.split = corpus.split;
  for (const Sketch& s : corpus.sketches) {
    if (s.label && out.ClassIndex(*s.label) >= 0) out.sketches.push_back(s);
  }
  return out;
}

std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace primsketch

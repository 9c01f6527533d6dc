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

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "fixtures.h"
#include "primsketch/error.h"
#include "primsketch/stroke_data.h"

namespace primsketch {
namespace {

std::pair<Vec2, Vec2> Bounds(const Sketch& s) {
  const auto abs = ToAbsolute(s.points);
  Vec2 lo{1e300, 1e300}, hi{-1e300, -1e300};
  for (const Vec2& p : abs) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  return {lo, hi};
}

Sketch RandomSketch(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  Sketch s;
  for (int i = 0; i < n; ++i) {
    s.points.push_back({u(rng), u(rng), std::uint8_t(i + 1 == n || rng() % 5 == 0)});
  }
  return s;
}

TEST(ParseQuickDraw, SingleStrokeIsDifferenced) {
  std::istringstream in(
      R"({"word":"line","drawing":[[[0,10,10],[0,0,5]]]})"
      "\n");
  const ParseResult r = ParseQuickDrawNdjson(in);
  ASSERT_EQ(r.corpus.sketches.size(), 1u);
  const std::vector<Stroke3Point> want{{0, 0, 0}, {10, 0, 0}, {0, 5, 1}};
  EXPECT_EQ(r.corpus.sketches[0].points, want);
  EXPECT_EQ(r.corpus.sketches[0].label, "line");
  EXPECT_EQ(r.corpus.class_names, std::vector<std::string>{"line"});
}

TEST(ParseQuickDraw, TwoStrokesCarryTwoPenUps) {
  std::istringstream in(
      R"({"word":"eq","drawing":[[[0,5,9],[0,0,0]],[[0,9],[4,4]]]})"
      "\n");
  const ParseResult r = ParseQuickDrawNdjson(in);
  ASSERT_EQ(r.corpus.sketches.size(), 1u);
  const auto& pts = r.corpus.sketches[0].points;
  EXPECT_EQ(std::count_if(pts.begin(), pts.end(), [](auto& p) { return p.pen == 1; }), 2);
  EXPECT_EQ(pts.back().pen, 1);
}

TEST(ParseQuickDraw, EmptyDrawingSkippedWithWarning) {
  std::istringstream in(R"({"word":"a","drawing":[]})" "\n"
                        R"({"word":"a","drawing":[[[0,1],[0,1]]]})" "\n");
  const ParseResult r = ParseQuickDrawNdjson(in);
  EXPECT_EQ(r.corpus.sketches.size(), 1u);
  EXPECT_EQ(r.warning_count(), 1u);
  EXPECT_EQ(r.error_count(), 0u);
}

TEST(ParseQuickDraw, MalformedLineRecordedAndParsingContinues) {
  std::istringstream in("{not json\n"
                        R"({"word":"b","drawing":[[[0,1],[0,1]]]})" "\n"
                        R"({"drawing":[[[0,1],[0,1]]]})" "\n"
                        R"({"word":"a","drawing":[[[0,3],[0,0]]]})" "\n");
  const ParseResult r = ParseQuickDrawNdjson(in);
  EXPECT_EQ(r.corpus.sketches.size(), 2u);
  ASSERT_EQ(r.error_count(), 2u);
  EXPECT_EQ(r.issues[0].line, 1u);
  EXPECT_EQ(r.issues[1].line, 3u);
  EXPECT_EQ(r.corpus.class_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_NO_THROW(r.corpus.Validate());
}

TEST(ParseQuickDraw, FinalPenStateAlwaysUp) {
  std::mt19937_64 rng(3);
  std::ostringstream text;
  for (int line = 0; line < 50; ++line) {
    text << R"({"word":"w","drawing":[)";
    const int strokes = 1 + rng() % 4;
    for (int s = 0; s < strokes; ++s) {
      const int n = 1 + rng() % 6;
      std::string xs, ys;
      for (int i = 0; i < n; ++i) {
        xs += (i ? "," : "") + std::to_string(rng() % 255);
        ys += (i ? "," : "") + std::to_string(rng() % 255);
      }
      text << (s ? "," : "") << "[[" << xs << "],[" << ys << "]]";
    }
    text << "]}\n";
  }
  std::istringstream in(text.str());
  const ParseResult r = ParseQuickDrawNdjson(in);
  ASSERT_EQ(r.corpus.sketches.size(), 50u);
  for (const Sketch& s : r.corpus.sketches) EXPECT_EQ(s.points.back().pen, 1);
}

TEST(Normalize, SharedScaleMinMax) {
  Sketch s;
  s.points = {{0, 0, 0}, {200, 0, 0}, {0, 100, 1}};
  const auto [lo, hi] = Bounds(Normalize(s));
  EXPECT_NEAR(lo.x, 0.0, 1e-12);
  EXPECT_NEAR(lo.y, 0.0, 1e-12);
  EXPECT_NEAR(hi.x, 1.0, 1e-12);
  EXPECT_NEAR(hi.y, 0.5, 1e-12);
}

TEST(Normalize, IdempotentAndPenPreserving) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Sketch s = RandomSketch(rng, 2 + trial % 20);
    const Sketch once = Normalize(s);
    const Sketch twice = Normalize(once);
    ASSERT_EQ(once.points.size(), twice.points.size());
    for (std::size_t i = 0; i < once.points.size(); ++i) {
      EXPECT_NEAR(once.points[i].dx, twice.points[i].dx, 1e-12);
      EXPECT_NEAR(once.points[i].dy, twice.points[i].dy, 1e-12);
      EXPECT_EQ(once.points[i].pen, s.points[i].pen);
    }
    const auto [lo, hi] = Bounds(once);
    EXPECT_GE(lo.x, -1e-12);
    EXPECT_GE(lo.y, -1e-12);
    EXPECT_LE(hi.x, 1 + 1e-12);
    EXPECT_LE(hi.y, 1 + 1e-12);
    EXPECT_NEAR(std::max(hi.x - lo.x, hi.y - lo.y), 1.0, 1e-12);
  }
}

TEST(Normalize, DegenerateThrows) {
  Sketch single;
  single.points = {{3, 4, 1}};
  try {
    Normalize(single);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerateGeometry);
    EXPECT_NE(std::string(e.what()).find("degenerate geometry"), std::string::npos);
  }
  Sketch same;
  same.points = {{1, 1, 0}, {0, 0, 0}, {0, 0, 1}};
  EXPECT_THROW(Normalize(same), Error);
}

TEST(Offsets, IntegrationDifferencingDuality) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Sketch s = RandomSketch(rng, 1 + trial % 30);
    std::vector<std::uint8_t> pens;
    for (const auto& p : s.points) pens.push_back(p.pen);
    const auto back = FromAbsolute(ToAbsolute(s.points), pens);
    ASSERT_EQ(back.size(), s.points.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      EXPECT_NEAR(back[i].dx, s.points[i].dx, 1e-12);
      EXPECT_NEAR(back[i].dy, s.points[i].dy, 1e-12);
      EXPECT_EQ(back[i].pen, s.points[i].pen);
    }
  }
}

TEST(Synthesize, SquareHasFourEqualAxisAlignedStrokes) {
  const Sketch s = Synthesize("square", 0.0, 99);
  std::vector<Stroke3Point> strokes;
  for (std::size_t i = 1; i < s.points.size(); ++i) {
    if (std::hypot(s.points[i].dx, s.points[i].dy) > 0) strokes.push_back(s.points[i]);
  }
  ASSERT_EQ(strokes.size(), 4u);
  const double len = std::hypot(strokes[0].dx, strokes[0].dy);
  for (const auto& p : strokes) {
    EXPECT_NEAR(std::hypot(p.dx, p.dy), len, 1e-12);
    EXPECT_TRUE(std::abs(p.dx) < 1e-12 || std::abs(p.dy) < 1e-12);
  }
}

TEST(Synthesize, DeterministicAndSeedSensitive) {
  EXPECT_EQ(Synthesize("zigzag", 0.01, 1), Synthesize("zigzag", 0.01, 1));
  EXPECT_NE(Synthesize("zigzag", 0.01, 1), Synthesize("zigzag", 0.01, 2));
  EXPECT_THROW(Synthesize("giraffe", 0.0, 1), Error);
  EXPECT_THROW(Synthesize("square", -1.0, 1), Error);
}

TEST(Synthesize, EveryKindIsNormalized) {
  for (const std::string& kind : SyntheticShapeKinds()) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Sketch s = SynthesizeVariant(kind, {}, seed);
      const auto [lo, hi] = Bounds(s);
      EXPECT_GE(lo.x, -1e-9) << kind;
      EXPECT_LE(hi.x, 1 + 1e-9) << kind;
      EXPECT_LE(hi.y, 1 + 1e-9) << kind;
      EXPECT_EQ(s.points.back().pen, 1) << kind;
    }
  }
}

TEST(CorpusIo, RoundTripIsByteIdentical) {
  SketchCorpus c = SynthesizeCorpus({"circle", "square", "zigzag", "star"}, 25, 7);
  c.split = Split::kValidation;
  ASSERT_EQ(c.sketches.size(), 100u);
  const auto path = testing::ScratchDir("corpus_io") / "c.bin";
  SaveCorpus(c, path);
  const SketchCorpus back = LoadCorpus(path);
  EXPECT_EQ(back, c);
  EXPECT_EQ(SerializeCorpusRecords(back), SerializeCorpusRecords(c));
}

TEST(CorpusIo, EmptyCorpusLoads) {
  SketchCorpus c;
  c.class_names = {"cat", "dog"};
  const auto path = testing::ScratchDir("corpus_io") / "empty.bin";
  SaveCorpus(c, path);
  const SketchCorpus back = LoadCorpus(path);
  EXPECT_TRUE(back.sketches.empty());
  EXPECT_EQ(back.class_names, c.class_names);
}

TEST(CorpusIo, TruncatedOrCorruptFileThrows) {
  const SketchCorpus c = SynthesizeCorpus({"circle"}, 3, 1);
  const std::string bytes = SerializeCorpusRecords(c);
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, bytes.size() / 2, bytes.size() - 1}) {
    try {
      DeserializeCorpusRecords(std::string_view(bytes).substr(0, cut), c.class_names);
      ADD_FAILURE() << "cut at " << cut;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kFormat);
    }
  }
  std::string wrong_version = bytes;
  wrong_version[4] = 9;
  try {
    DeserializeCorpusRecords(wrong_version, c.class_names);
    FAIL();
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('9'), std::string::npos) << msg;
    EXPECT_NE(msg.find('1'), std::string::npos) << msg;
  }
}

TEST(Corpus, SplitIsSeedStableAndPartitions) {
  const SketchCorpus c = SynthesizeCorpus({"circle", "square"}, 50, 3);
  const auto [train, val] = SplitCorpus(c, 0.1, 42);
  EXPECT_EQ(train.sketches.size() + val.sketches.size(), c.sketches.size());
  EXPECT_EQ(val.sketches.size(), 10u);
  EXPECT_EQ(val.split, Split::kValidation);
  const auto again = SplitCorpus(c, 0.1, 42);
  EXPECT_EQ(again.second, val);
  EXPECT_NE(SplitCorpus(c, 0.1, 43).second, val);
}

TEST(Corpus, FilterClassesReindexes) {
  const SketchCorpus c = SynthesizeCorpus({"circle", "square", "star"}, 4, 3);
  const SketchCorpus f = FilterClasses(c, {"star", "circle"});
  EXPECT_EQ(f.class_names, (std::vector<std::string>{"star", "circle"}));
  EXPECT_EQ(f.sketches.size(), 8u);
  for (const Sketch& s : f.sketches) EXPECT_NE(*s.label, "square");
}

TEST(Corpus, ValidateRejectsUnknownLabel) {
  SketchCorpus c = SynthesizeCorpus({"circle"}, 1, 3);
  c.sketches[0].label = "dog";
  EXPECT_THROW(c.Validate(), Error);
}

TEST(Split, NamesRoundTrip) {
  for (Split s : {Split::kTrain, Split::kValidation, Split::kTest}) {
    EXPECT_EQ(ParseSplit(SplitName(s)), s);
  }
  EXPECT_THROW(ParseSplit("bogus"), Error);
}

}  // namespace
}  // namespace primsketch

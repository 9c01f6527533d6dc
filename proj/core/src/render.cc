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

#include "primsketch/render.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#ifdef PRIMSKETCH_HAVE_PNG
#include <png.h>
#endif

#include "primsketch/binary_io.h"
#include "primsketch/error.h"

namespace primsketch {
namespace {

void FitToUnitBox(std::vector<Polyline>& polylines) {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = min_x;
  double max_x = -min_x;
  double max_y = -min_x;
  for (const Polyline& pl : polylines) {
    for (const Vec2& p : pl.points) {
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
  }
  if (!std::isfinite(min_x)) return;
  const double range = std::max(max_x - min_x, max_y - min_y);
  const double scale = range > 0.0 ? 1.0 / range : 1.0;
  const double cx = 0.5 * (min_x + max_x);
  const double cy = 0.5 * (min_y + max_y);
  for (Polyline& pl : polylines) {
    for (Vec2& p : pl.points) {
      p.x = std::clamp(0.5 + (p.x - cx) * scale, 0.0, 1.0);
      p.y = std::clamp(0.5 + (p.y - cy) * scale, 0.0, 1.0);
    }
  }
}

void PadSinglePoints(std::vector<Polyline>& polylines) {
  for (Polyline& pl : polylines) {
    if (pl.points.size() == 1) pl.points.push_back(pl.points.front());
  }
}

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

SanitizedTokens SanitizeTokens(std::span<const int> ids, const Vocabulary& vocab) {
  SanitizedTokens out;
  out.ids.push_back(vocab.bos());
  std::size_t i = 0;
  if (ids.empty() || ids[0] != vocab.bos()) {
    out.repairs.push_back({0, "missing BOS inserted"});
  } else {
    i = 1;
  }
  bool ended = false;
  bool truncated = false;
  std::size_t last_sep = 0;
  for (; i < ids.size(); ++i) {
    const int id = ids[i];
    if (id == vocab.eos()) {
      ended = true;
      break;
    }
    if (!vocab.IsValid(id)) {
      out.repairs.push_back({i, "unknown token id " + std::to_string(id) +
                                    "; truncated"});
      truncated = true;
      break;
    }
    if (id == vocab.bos()) {
      out.repairs.push_back({i, "BOS after start; truncated"});
      truncated = true;
      break;
    }
    if (id == vocab.pad()) {
      out.repairs.push_back({i, "PAD before EOS; truncated"});
      truncated = true;
      break;
    }
    if (id == vocab.sep()) {
      if (out.ids.back() == vocab.sep()) {
        out.repairs.push_back({i, "repeated SEP dropped"});
        continue;
      }
      last_sep = i;
    }
    out.ids.push_back(id);
  }
  if (out.ids.back() == vocab.sep()) {
    out.ids.pop_back();
    out.repairs.push_back({last_sep, "dangling SEP dropped"});
  }
  if (!ended && !truncated) {
    out.repairs.push_back({ids.size(), "missing EOS appended"});
  }
  out.ids.push_back(vocab.eos());
  return out;
}

std::vector<Polyline> AbstractedToPolylines(const AbstractedSketch& abstracted,
                                            const PrimitiveDictionary& dict) {
  std::vector<Polyline> out;
  if (abstracted.runs.empty()) return out;
  Vec2 cur{0.5, 0.5};
  out.push_back(Polyline{{cur}});
  for (const PrimitiveRun& run : abstracted.runs) {
    const Primitive& prim = dict.at(run.primitive_id);
    const double len = prim.length * run.repeat_count;
    cur.x += prim.direction.x * len;
    cur.y += prim.direction.y * len;
    if (run.pen_up_move) {
      out.push_back(Polyline{{cur}});
    } else {
      out.back().points.push_back(cur);
    }
  }
  PadSinglePoints(out);
  FitToUnitBox(out);
  return out;
}

PolylineResult TokensToPolylines(std::span<const int> ids,
                                 const PrimitiveDictionary& dict,
                                 const Vocabulary& vocab, bool tolerant) {
  if (vocab.primitive_count() != dict.orientation_count()) {
    throw Error(ErrorKind::kInvalidArgument,
                "vocabulary and dictionary disagree on K");
  }
  PolylineResult result;
  AbstractedSketch abstracted;
  if (tolerant) {
    SanitizedTokens clean = SanitizeTokens(ids, vocab);
    result.repairs = std::move(clean.repairs);
    abstracted = Decode(std::span<const int>(clean.ids), vocab);
  } else {
    abstracted = Decode(ids, vocab);
  }
  result.polylines = AbstractedToPolylines(abstracted, dict);
  return result;
}

std::vector<Polyline> SketchToPolylines(const Sketch& sketch) {
  std::vector<Polyline> out;
  const std::vector<Vec2> abs = ToAbsolute(sketch.points);
  bool open = false;
  for (std::size_t i = 0; i < abs.size(); ++i) {
    if (!open) {
      out.emplace_back();
      open = true;
    }
    out.back().points.push_back(abs[i]);
    if (sketch.points[i].pen == 1) open = false;
  }
  PadSinglePoints(out);
  FitToUnitBox(out);
  return out;
}

std::string ToSvg(const std::vector<Polyline>& polylines,
                  const SvgOptions& options) {
  if (options.canvas_px < 16) {
    throw Error(ErrorKind::kInvalidArgument, "canvas must be at least 16 px");
  }
  if (!(options.stroke_width > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "stroke width must be positive");
  }
  const double size = options.canvas_px;
  const double margin = std::min(options.stroke_width / 2.0, size / 4.0);
  const double span = size - 2.0 * margin;
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
      << options.canvas_px << "\" height=\"" << options.canvas_px
      << "\" viewBox=\"0 0 " << options.canvas_px << ' ' << options.canvas_px
      << "\">\n";
  for (const Polyline& pl : polylines) {
    if (pl.points.empty()) continue;
    svg << "<path d=\"";
    for (std::size_t i = 0; i < pl.points.size(); ++i) {
      const Vec2& p = pl.points[i];
      svg << (i == 0 ? "M" : " L") << Num(margin + p.x * span) << ' '
          << Num(margin + p.y * span);
    }
    svg << "\" fill=\"none\" stroke=\"" << options.stroke_color
        << "\" stroke-width=\"" << Num(options.stroke_width)
        << "\" stroke-linecap=\"round\" stroke-linejoin=\"round\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

GrayImage Rasterize(const std::vector<Polyline>& polylines, int canvas_px,
                    double line_width) {
  if (canvas_px < 16) {
    throw Error(ErrorKind::kInvalidArgument, "canvas must be at least 16 px");
  }
  GrayImage img{canvas_px, canvas_px,
                std::vector<std::uint8_t>(static_cast<std::size_t>(canvas_px) * canvas_px, 255)};
  const double r = std::max(0.5, line_width / 2.0);
  const double margin = r;
  const double span = canvas_px - 1 - 2.0 * margin;
  auto stamp = [&](double cx, double cy) {
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - r)));
    const int x1 = std::min(canvas_px - 1, static_cast<int>(std::ceil(cx + r)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - r)));
    const int y1 = std::min(canvas_px - 1, static_cast<int>(std::ceil(cy + r)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - cx;
        const double dy = y - cy;
        if (dx * dx + dy * dy <= r * r) {
          img.pixels[static_cast<std::size_t>(y) * canvas_px + x] = 0;
        }
      }
    }
  };
  for (const Polyline& pl : polylines) {
    for (std::size_t i = 0; i < pl.points.size(); ++i) {
      const double ax = margin + pl.points[i].x * span;
      const double ay = margin + pl.points[i].y * span;
      if (i == 0) {
        stamp(ax, ay);
        continue;
      }
      const double bx = margin + pl.points[i - 1].x * span;
      const double by = margin + pl.points[i - 1].y * span;
      const int steps = std::max(1, static_cast<int>(std::ceil(
                                        std::hypot(ax - bx, ay - by) / 0.5)));
      for (int s = 1; s <= steps; ++s) {
        const double t = static_cast<double>(s) / steps;
        stamp(bx + (ax - bx) * t, by + (ay - by) * t);
      }
    }
  }
  return img;
}

#ifdef PRIMSKETCH_HAVE_PNG

bool PngSupported() { return true; }

std::string EncodePng(const GrayImage& image) {
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw Error(ErrorKind::kIo, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorKind::kIo, "png_create_info_struct failed");
  }
  std::string out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::kIo, "PNG encoding failed");
  }
  png_set_write_fn(
      png, &out,
      [](png_structp p, png_bytep data, png_size_t n) {
        static_cast<std::string*>(png_get_io_ptr(p))
            ->append(reinterpret_cast<const char*>(data), n);
      },
      [](png_structp) {});
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(image.pixels.data() +
                                             static_cast<std::size_t>(y) * image.width));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

#else

bool PngSupported() { return false; }

std::string EncodePng(const GrayImage&) {
  throw Error(ErrorKind::kUnavailable, "built without PNG support");
}

#endif

void WritePng(const GrayImage& image, const std::filesystem::path& path) {
  WriteFileBytes(path, EncodePng(image));
}

}  // namespace primsketch

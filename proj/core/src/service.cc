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

#include "primsketch/service.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <random>
#include <shared_mutex>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "primsketch/error.h"
#include "primsketch/render.h"
#include "primsketch/sampling.h"
#include "primsketch/stroke_data.h"
#include "primsketch/version.h"

namespace primsketch {
namespace {

using nlohmann::json;

// Request validation failure carrying an HTTP status.
struct RequestError {
  int status;
  std::string message;
  std::optional<std::pair<std::string, std::int64_t>> limit;
};

HttpResponse ErrorResponse(const RequestError& e) {
  json body{{"error", e.message}, {"status", e.status}};
  if (e.limit) {
    body["limit"] = json{{"name", e.limit->first}, {"value", e.limit->second}};
  }
  return HttpResponse{e.status, body.dump()};
}

json ParseBody(const std::string& body) {
  json j = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    throw RequestError{422, "request body must be a JSON object", std::nullopt};
  }
  return j;
}

std::vector<Stroke3Point> ParseStrokes(const json& body, int max_points) {
  if (!body.contains("strokes")) return {};
  const json& arr = body["strokes"];
  if (!arr.is_array()) {
    throw RequestError{422, "strokes must be an array of [dx, dy, pen]", std::nullopt};
  }
  if (arr.size() > static_cast<std::size_t>(max_points)) {
    throw RequestError{422,
                       "strokes has " + std::to_string(arr.size()) +
                           " points, above max_prefix_points",
                       std::make_pair("max_prefix_points", std::int64_t{max_points})};
  }
  std::vector<Stroke3Point> points;
  points.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json& p = arr[i];
    const std::string where = "strokes[" + std::to_string(i) + "]";
    if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() ||
        !p[2].is_number()) {
      throw RequestError{422, where + " must be [dx, dy, pen]", std::nullopt};
    }
    const double dx = p[0].get<double>();
    const double dy = p[1].get<double>();
    const double pen = p[2].get<double>();
    if (!std::isfinite(dx) || !std::isfinite(dy)) {
      throw RequestError{422, where + " has a non-finite offset", std::nullopt};
    }
    if (pen != 0.0 && pen != 1.0) {
      throw RequestError{422, where + " pen must be 0 or 1", std::nullopt};
    }
    points.push_back({dx, dy, static_cast<std::uint8_t>(pen)});
  }
  return points;
}

double SketchScale(const std::vector<Stroke3Point>& points) {
  const std::vector<Vec2> abs = ToAbsolute(points);
  double min_x = abs[0].x, max_x = abs[0].x, min_y = abs[0].y, max_y = abs[0].y;
  for (const Vec2& p : abs) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  return std::max(max_x - min_x, max_y - min_y);
}

json StrokesJson(const std::vector<Stroke3Point>& points) {
  json arr = json::array();
  for (const auto& p : points) arr.push_back(json::array({p.dx, p.dy, int(p.pen)}));
  return arr;
}

std::uint64_t ServerSeed() {
  std::random_device rd;
  const std::uint64_t hi = rd();
  const std::uint64_t lo = rd();
  // Kept below 2^53 so clients that read JSON numbers as doubles can echo it.
  return ((hi << 32) | lo) & ((std::uint64_t{1} << 53) - 1);
}

}  // namespace

void ServiceConfig::Validate() const {
  if (generators.empty() && !classifier) {
    throw Error(ErrorKind::kInvalidArgument, "service needs at least one checkpoint");
  }
  if (limits.max_num_samples < 1 || limits.max_prefix_points < 1 ||
      limits.max_new_tokens < 1) {
    throw Error(ErrorKind::kInvalidArgument, "service limits must be positive");
  }
  if (port < 0 || port > 65535) {
    throw Error(ErrorKind::kInvalidArgument, "port out of range");
  }
  if (svg_canvas_px < 16) {
    throw Error(ErrorKind::kInvalidArgument, "svg canvas must be at least 16 px");
  }
}

struct Service::State {
  struct Loaded {
    Checkpoint checkpoint;
    std::shared_ptr<const TransformerModel<float>> f32;
    std::shared_ptr<const TransformerModel<double>> f64;

    explicit Loaded(Checkpoint c) : checkpoint(std::move(c)) {
      if (checkpoint.precision == Precision::kFloat64) {
        f64 = std::make_shared<TransformerModel<double>>(checkpoint.MakeModel<double>());
      } else {
        f32 = std::make_shared<TransformerModel<float>>(checkpoint.MakeModel<float>());
      }
    }

    GenerationResult Sample(std::span<const int> prefix,
                            const SamplerConfig& sc) const {
      return f64 ? primsketch::Complete(*f64, prefix, sc)
                 : primsketch::Complete(*f32, prefix, sc);
    }

    std::vector<double> ClassProbabilities(const std::vector<int>& ids) const {
      TokenSequence seq{ids, ids.size()};
      std::vector<double> logits;
      if (f64) {
        auto t = f64->ForwardClassify(seq);
        logits.assign(t.values().begin(), t.values().end());
      } else {
        auto t = f32->ForwardClassify(seq);
        logits.assign(t.values().begin(), t.values().end());
      }
      return SamplingDistribution(logits, 1.0);
    }
  };

  mutable std::shared_mutex mutex;
  std::map<std::string, std::shared_ptr<const Loaded>> generators;
  std::shared_ptr<const Loaded> classifier;
  std::map<std::string, std::string> missing;  // name -> reason
};

Service::Service(ServiceConfig config)
    : config_(std::move(config)), state_(std::make_unique<State>()) {
  config_.Validate();
  LoadMissing();
}

Service::Service(ServiceConfig config,
                 std::map<std::string, Checkpoint> generators,
                 std::optional<Checkpoint> classifier)
    : config_(std::move(config)), state_(std::make_unique<State>()) {
  for (auto& [name, ckpt] : generators) {
    config_.generators.emplace(name, std::filesystem::path());
    state_->generators[name] = std::make_shared<State::Loaded>(std::move(ckpt));
  }
  if (classifier) {
    if (!config_.classifier) config_.classifier = std::filesystem::path();
    state_->classifier = std::make_shared<State::Loaded>(std::move(*classifier));
  }
  config_.Validate();
}

Service::~Service() = default;

bool Service::LoadMissing() {
  std::unique_lock lock(state_->mutex);
  state_->missing.clear();
  for (const auto& [name, path] : config_.generators) {
    if (state_->generators.count(name)) continue;
    try {
      state_->generators[name] = std::make_shared<State::Loaded>(LoadCheckpoint(path));
    } catch (const std::exception& e) {
      state_->missing[name] = e.what();
    }
  }
  if (config_.classifier && !state_->classifier) {
    try {
      state_->classifier =
          std::make_shared<State::Loaded>(LoadCheckpoint(*config_.classifier));
    } catch (const std::exception& e) {
      state_->missing["classifier"] = e.what();
    }
  }
  return state_->missing.empty();
}

HttpResponse Service::Handle(const std::string& method, const std::string& path,
                             const std::string& body) const {
  struct Route {
    const char* method;
    const char* path;
  };
  static constexpr Route kRoutes[] = {{"GET", "/v1/health"},
                                      {"POST", "/v1/complete"},
                                      {"POST", "/v1/generate"},
                                      {"POST", "/v1/classify"}};
  bool known_path = false;
  for (const Route& r : kRoutes) {
    if (path != r.path) continue;
    known_path = true;
    if (method == "OPTIONS") return HttpResponse{204, ""};
    if (method != r.method) continue;
    if (path == "/v1/health") return Health();
    if (path == "/v1/complete") return Complete(body);
    if (path == "/v1/generate") return Generate(body);
    return Classify(body);
  }
  if (known_path) {
    return ErrorResponse({405, "method " + method + " not allowed on " + path, std::nullopt});
  }
  return ErrorResponse({404, "no endpoint " + path, std::nullopt});
}

HttpResponse Service::Health() const {
  std::shared_lock lock(state_->mutex);
  json loaded = json::array();
  for (const auto& [name, g] : state_->generators) loaded.push_back(name);
  if (state_->classifier) loaded.push_back("classifier");
  json missing = json::object();
  for (const auto& [name, why] : state_->missing) missing[name] = why;
  const bool ok = state_->missing.empty();
  json body{{"status", ok ? "ok" : "unavailable"},
            {"loaded_checkpoints", loaded},
            {"missing", missing},
            {"versions",
             {{"api", kApiVersion},
              {"library", kLibraryVersion},
              {"checkpoint_format", kCheckpointFormatVersion},
              {"corpus_format", kCorpusFormatVersion}}}};
  return HttpResponse{ok ? 200 : 503, body.dump()};
}

HttpResponse Service::Complete(const std::string& body) const {
  return Sample(body, /*with_prefix=*/true);
}

HttpResponse Service::Generate(const std::string& body) const {
  return Sample(body, /*with_prefix=*/false);
}

HttpResponse Service::Sample(const std::string& body, bool with_prefix) const {
  try {
    const json req = ParseBody(body);
    if (!req.contains("class") || !req["class"].is_string()) {
      throw RequestError{422, "class must be a string", std::nullopt};
    }
    const std::string cls = req["class"].get<std::string>();
    if (!config_.generators.count(cls)) {
      throw RequestError{404, "unknown class '" + cls + "'", std::nullopt};
    }
    std::shared_ptr<const State::Loaded> gen;
    {
      std::shared_lock lock(state_->mutex);
      auto it = state_->generators.find(cls);
      if (it != state_->generators.end()) gen = it->second;
    }
    if (!gen) {
      throw RequestError{503, "checkpoint for '" + cls + "' not loaded", std::nullopt};
    }

    SamplerConfig sc;
    if (req.contains("num_samples")) {
      const json& n = req["num_samples"];
      if (!n.is_number_integer()) {
        throw RequestError{422, "num_samples must be an integer", std::nullopt};
      }
      const auto v = n.get<std::int64_t>();
      if (v > config_.limits.max_num_samples) {
        throw RequestError{422,
                           "num_samples " + std::to_string(v) +
                               " exceeds max_num_samples",
                           std::make_pair("max_num_samples",
                                          std::int64_t{config_.limits.max_num_samples})};
      }
      if (v < 1) throw RequestError{422, "num_samples must be >= 1", std::nullopt};
      sc.num_samples = static_cast<int>(v);
    }
    if (req.contains("temperature")) {
      const json& t = req["temperature"];
      if (!t.is_number() || !(t.get<double>() > 0.0) || !std::isfinite(t.get<double>())) {
        throw RequestError{422, "temperature must be a number > 0", std::nullopt};
      }
      sc.temperature = t.get<double>();
    }
    if (req.contains("seed") && !req["seed"].is_null()) {
      if (!req["seed"].is_number_unsigned()) {
        throw RequestError{422, "seed must be a non-negative integer", std::nullopt};
      }
      sc.seed = req["seed"].get<std::uint64_t>();
    } else {
      sc.seed = ServerSeed();
    }
    sc.max_new_tokens = config_.limits.max_new_tokens;

    const Checkpoint& ckpt = gen->checkpoint;
    const PrimitiveDictionary dict = ckpt.dictionary();
    const Vocabulary vocab = ckpt.vocabulary();
    std::vector<Stroke3Point> prefix_points =
        with_prefix ? ParseStrokes(req, config_.limits.max_prefix_points)
                    : std::vector<Stroke3Point>{};
    std::vector<int> prefix{vocab.bos()};
    double scale = 1.0;
    if (!prefix_points.empty()) {
      try {
        prefix = PrefixTokens(Sketch{prefix_points, std::nullopt}, dict);
      } catch (const Error& e) {
        throw RequestError{422, e.what(), std::nullopt};
      }
      scale = SketchScale(prefix_points);
    }
    if (prefix.size() >= static_cast<std::size_t>(ckpt.config.max_seq_len)) {
      throw RequestError{422,
                         "prefix tokenizes to " + std::to_string(prefix.size()) +
                             " tokens, at or above max_seq_len",
                         std::make_pair("max_seq_len", std::int64_t{ckpt.config.max_seq_len})};
    }

    const GenerationResult result = gen->Sample(prefix, sc);
    json completions = json::array();
    for (const GeneratedSequence& seq : result.sequences) {
      std::vector<int> cont{vocab.bos()};
      cont.insert(cont.end(), seq.tokens.begin() + result.prefix_length, seq.tokens.end());
      const SanitizedTokens clean = SanitizeTokens(cont, vocab);
      const AbstractedSketch runs = Decode(std::span<const int>(clean.ids), vocab);
      std::vector<Stroke3Point> full = prefix_points;
      if (!runs.runs.empty()) {
        const Sketch tail = ReconstructUnnormalized(runs, dict);
        if (full.empty()) {
          full = tail.points;
        } else {
          // tail[0] is the current pen position; bridge the pen state so the
          // submitted points stay untouched.
          if (tail.points[0].pen != full.back().pen) {
            full.push_back({0.0, 0.0, tail.points[0].pen});
          }
          for (std::size_t i = 1; i < tail.points.size(); ++i) {
            const Stroke3Point& p = tail.points[i];
            full.push_back({p.dx * scale, p.dy * scale, p.pen});
          }
        }
      }
      std::string svg;
      if (!full.empty()) {
        svg = ToSvg(SketchToPolylines(Sketch{full, std::nullopt}),
                    SvgOptions{config_.svg_stroke_width, config_.svg_canvas_px});
      } else {
        svg = ToSvg({}, SvgOptions{config_.svg_stroke_width, config_.svg_canvas_px});
      }
      completions.push_back(json{{"strokes", StrokesJson(full)},
                                 {"svg", svg},
                                 {"stop_reason", StopReasonName(seq.stop_reason)},
                                 {"tokens", seq.tokens},
                                 {"valid", seq.valid}});
    }
    json out{{"class", cls},
             {"seed", sc.seed},
             {"temperature", sc.temperature},
             {"num_samples", sc.num_samples},
             {"prefix_token_count", result.prefix_length},
             {"completions", completions}};
    return HttpResponse{200, out.dump()};
  } catch (const RequestError& e) {
    return ErrorResponse(e);
  } catch (const std::exception& e) {
    return ErrorResponse({500, e.what(), std::nullopt});
  }
}

HttpResponse Service::Classify(const std::string& body) const {
  try {
    std::shared_ptr<const State::Loaded> cls;
    {
      std::shared_lock lock(state_->mutex);
      cls = state_->classifier;
    }
    if (!cls) throw RequestError{503, "no classifier loaded", std::nullopt};
    const json req = ParseBody(body);
    if (!req.contains("strokes")) {
      throw RequestError{422, "strokes is required", std::nullopt};
    }
    const auto points = ParseStrokes(req, config_.limits.max_prefix_points);
    if (points.empty()) throw RequestError{422, "strokes is empty", std::nullopt};
    const Checkpoint& ckpt = cls->checkpoint;
    const Vocabulary vocab = ckpt.vocabulary();
    TokenSequence tokens;
    try {
      tokens = Encode(Abstract(Normalize(Sketch{points, std::nullopt}), ckpt.dictionary()),
                      vocab);
    } catch (const Error& e) {
      throw RequestError{422, e.what(), std::nullopt};
    }
    if (tokens.size() > static_cast<std::size_t>(ckpt.config.max_seq_len)) {
      tokens = PadOrTruncate(tokens, ckpt.config.max_seq_len, vocab).tokens;
      tokens.ids.resize(tokens.attention_length);
    }
    const std::vector<double> probs = cls->ClassProbabilities(tokens.ids);
    std::vector<int> order(probs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return probs[a] > probs[b]; });
    const std::size_t k = std::min<std::size_t>(5, probs.size());
    json topk = json::array();
    for (std::size_t r = 0; r < k; ++r) {
      topk.push_back(json{{"class", ckpt.class_names.at(order[r])},
                          {"probability", probs[order[r]]}});
    }
    return HttpResponse{200, json{{"k", k}, {"topk", topk}}.dump()};
  } catch (const RequestError& e) {
    return ErrorResponse(e);
  } catch (const std::exception& e) {
    return ErrorResponse({500, e.what(), std::nullopt});
  }
}

std::string Service::AllowedOrigin(const std::string& origin) const {
  for (const std::string& allowed : config_.cors_allow) {
    if (allowed == "*") return "*";
    if (!origin.empty() && allowed == origin) return origin;
  }
  return "";
}

struct HttpServer::Impl {
  const Service& service;
  httplib::Server server;

  explicit Impl(const Service& s) : service(s) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
      const HttpResponse r = service.Handle(req.method, req.path, req.body);
      res.status = r.status;
      const std::string origin = service.AllowedOrigin(req.get_header_value("Origin"));
      if (!origin.empty()) {
        res.set_header("Access-Control-Allow-Origin", origin);
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        if (origin != "*") res.set_header("Vary", "Origin");
      }
      if (!r.body.empty()) res.set_content(r.body, r.content_type);
    };
    const std::string pattern = R"(/.*)";
    server.Get(pattern, handler);
    server.Post(pattern, handler);
    server.Options(pattern, handler);
    server.Put(pattern, handler);
    server.Delete(pattern, handler);
  }
};

HttpServer::HttpServer(const Service& service) : impl_(std::make_unique<Impl>(service)) {}
HttpServer::~HttpServer() = default;

bool HttpServer::Listen(const std::string& host, int port) {
  return impl_->server.listen(host, port);
}

int HttpServer::BindAnyPort(const std::string& host) {
  return impl_->server.bind_to_any_port(host);
}

bool HttpServer::ListenAfterBind() { return impl_->server.listen_after_bind(); }

void HttpServer::Stop() { impl_->server.stop(); }

}  // namespace primsketch

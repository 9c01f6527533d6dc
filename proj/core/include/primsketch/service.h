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

#ifndef PRIMSKETCH_SERVICE_H_
#define PRIMSKETCH_SERVICE_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "primsketch/checkpoint.h"

namespace primsketch {

struct ServiceLimits {
  int max_num_samples = 8;
  int max_prefix_points = 4096;
  std::int64_t max_new_tokens = 512;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  // class name -> fine-tuned completion/generation checkpoint
  std::map<std::string, std::filesystem::path> generators;
  std::optional<std::filesystem::path> classifier;
  ServiceLimits limits;
  std::vector<std::string> cors_allow;  // "*" allows any origin
  int svg_canvas_px = 256;
  double svg_stroke_width = 2.0;

  // Throws kInvalidArgument: no checkpoint configured, or a non-positive limit.
  void Validate() const;
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

// Transport-independent request handling. Checkpoints are loaded once and
// shared read-only, so Handle is safe to call concurrently.
class Service {
 public:
  // Loads whatever checkpoints exist; missing ones report 503 until
  // LoadMissing() succeeds.
  explicit Service(ServiceConfig config);
  // In-memory checkpoints (tests, embedding).
  Service(ServiceConfig config, std::map<std::string, Checkpoint> generators,
          std::optional<Checkpoint> classifier);
  ~Service();

  // Retries loading checkpoints that failed earlier; returns true when all
  // configured checkpoints are available.
  bool LoadMissing();

  HttpResponse Handle(const std::string& method, const std::string& path,
                      const std::string& body) const;

  HttpResponse Health() const;
  HttpResponse Complete(const std::string& body) const;
  HttpResponse Generate(const std::string& body) const;
  HttpResponse Classify(const std::string& body) const;

  // Value for Access-Control-Allow-Origin, or empty when not allowed.
  std::string AllowedOrigin(const std::string& origin) const;

  const ServiceConfig& config() const { return config_; }

 private:
  struct State;
  HttpResponse Sample(const std::string& body, bool with_prefix) const;

  ServiceConfig config_;
  std::unique_ptr<State> state_;
};

// Blocks serving `service` over HTTP until Stop() is called from another
// thread (or the process ends).
class HttpServer {
 public:
  explicit HttpServer(const Service& service);
  ~HttpServer();
  // Returns false if the address could not be bound.
  bool Listen(const std::string& host, int port);
  // Binds to an ephemeral port; returns it (or -1).
  int BindAnyPort(const std::string& host);
  bool ListenAfterBind();
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace primsketch

#endif  // PRIMSKETCH_SERVICE_H_

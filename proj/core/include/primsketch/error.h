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

#ifndef PRIMSKETCH_ERROR_H_
#define PRIMSKETCH_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace primsketch {

// Coarse classification of failures. The service layer maps these onto HTTP
// status codes and the CLI onto exit codes.
enum class ErrorKind {
  kInvalidArgument,
  kDegenerateGeometry,
  kParse,
  kFormat,       // corrupt or version-mismatched file
  kShapeMismatch,
  kNotFound,
  kUnavailable,
  kIo,
};

std::string_view ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace primsketch

#endif  // PRIMSKETCH_ERROR_H_

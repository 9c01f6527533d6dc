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

#ifndef PRIMSKETCH_BINARY_IO_H_
#define PRIMSKETCH_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>

#include "primsketch/error.h"

namespace primsketch {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian; big-endian hosts would need "
              "byte swapping in ByteWriter/ByteReader");

// Appends fixed-width little-endian values to a byte string.
class ByteWriter {
 public:
  template <typename T>
    requires std::is_arithmetic_v<T>
  void Put(T value) {
    char raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    bytes_.append(raw, sizeof(T));
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void PutSpan(std::span<const T> values) {
    bytes_.append(reinterpret_cast<const char*>(values.data()),
                  values.size_bytes());
  }

  void PutBytes(std::string_view raw) { bytes_.append(raw); }

  std::size_t size() const { return bytes_.size(); }
  const std::string& bytes() const { return bytes_; }
  std::string Take() { return std::move(bytes_); }

 private:
  std::string bytes_;
};

// Bounds-checked reader; every overrun throws ErrorKind::kFormat.
class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::string_view what)
      : bytes_(bytes), what_(what) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  T Get() {
    Require(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void GetSpan(std::span<T> out) {
    Require(out.size_bytes());
    std::memcpy(out.data(), bytes_.data() + pos_, out.size_bytes());
    pos_ += out.size_bytes();
  }

  std::string_view GetBytes(std::size_t n) {
    Require(n);
    std::string_view view = bytes_.substr(pos_, n);
    pos_ += n;
    return view;
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void Require(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorKind::kFormat,
                  std::string(what_) + ": truncated at byte " +
                      std::to_string(pos_) + " (needed " + std::to_string(n) +
                      " more, " + std::to_string(bytes_.size() - pos_) +
                      " available)");
    }
  }

  std::string_view bytes_;
  std::string_view what_;
  std::size_t pos_ = 0;
};

std::string ReadFileBytes(const std::filesystem::path& path);
// Writes via a temporary file and rename so readers never observe a partial
// file.
void WriteFileBytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace primsketch

#endif  // PRIMSKETCH_BINARY_IO_H_

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

#ifndef PRIMSKETCH_TOKENIZER_H_
#define PRIMSKETCH_TOKENIZER_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "primsketch/error.h"
#include "primsketch/primitives.h"

namespace primsketch {

// Primitive tokens occupy ids [0, K); the four special tokens follow.
class Vocabulary {
 public:
  explicit Vocabulary(int primitive_count);

  int primitive_count() const { return primitive_count_; }
  int size() const { return primitive_count_ + 4; }
  int bos() const { return primitive_count_; }
  int sep() const { return primitive_count_ + 1; }
  int eos() const { return primitive_count_ + 2; }
  int pad() const { return primitive_count_ + 3; }

  bool IsPrimitive(int id) const { return id >= 0 && id < primitive_count_; }
  bool IsValid(int id) const { return id >= 0 && id < size(); }
  std::string TokenName(int id) const;

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

 private:
  int primitive_count_;
};

struct TokenSequence {
  std::vector<int> ids;
  std::size_t attention_length = 0;  // tokens before the first PAD

  std::size_t size() const { return ids.size(); }
  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

// Decode failure pointing at the offending token.
class TokenError : public Error {
 public:
  TokenError(std::size_t position, const std::string& reason)
      : Error(ErrorKind::kParse,
              reason + " at position " + std::to_string(position)),
        position_(position),
        reason_(reason) {}

  std::size_t position() const { return position_; }
  const std::string& reason() const { return reason_; }

 private:
  std::size_t position_;
  std::string reason_;
};

// [BOS, run tokens..., EOS] where each run contributes its primitive id
// repeat_count times and a pen-up run is preceded by SEP.
TokenSequence Encode(const AbstractedSketch& abstracted, const Vocabulary& vocab);

// Inverse of Encode. Consecutive equal primitive tokens form one run, so
// decode(encode(a)) == Canonicalize(a). Throws TokenError on structural
// violations; PAD and anything after EOS are ignored.
AbstractedSketch Decode(const TokenSequence& tokens, const Vocabulary& vocab);
AbstractedSketch Decode(std::span<const int> ids, const Vocabulary& vocab);

// Merges adjacent runs that share a primitive id when the second one is a
// pen-down continuation; these are indistinguishable once tokenized.
AbstractedSketch Canonicalize(const AbstractedSketch& abstracted);
bool IsCanonical(const AbstractedSketch& abstracted);

struct PadResult {
  TokenSequence tokens;
  bool truncated = false;
};

// Pads with PAD up to max_len, or truncates to max_len - 1 content tokens and
// forces EOS into the last slot. A SEP that would end up directly before the
// forced EOS is dropped (the slot is padded instead).
PadResult PadOrTruncate(const TokenSequence& tokens, std::size_t max_len,
                        const Vocabulary& vocab);

// 1 + sum(repeat_count) + #pen_up runs + 1.
std::size_t EncodedLength(const AbstractedSketch& abstracted);

std::string TokensToJson(std::span<const int> ids);
std::vector<int> TokensFromJson(const std::string& text);

}  // namespace primsketch

#endif  // PRIMSKETCH_TOKENIZER_H_

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

#include "primsketch/tokenizer.h"

#include <nlohmann/json.hpp>

namespace primsketch {

Vocabulary::Vocabulary(int primitive_count) : primitive_count_(primitive_count) {
  if (primitive_count < 1) {
    throw Error(ErrorKind::kInvalidArgument,
                "vocabulary needs at least one primitive");
  }
}

std::string Vocabulary::TokenName(int id) const {
  if (id == bos()) return "BOS";
  if (id == sep()) return "SEP";
  if (id == eos()) return "EOS";
  if (id == pad()) return "PAD";
  return std::to_string(id);
}

TokenSequence Encode(const AbstractedSketch& abstracted,
                     const Vocabulary& vocab) {
  TokenSequence out;
  out.ids.reserve(EncodedLength(abstracted));
  out.ids.push_back(vocab.bos());
  for (const PrimitiveRun& run : abstracted.runs) {
    if (run.repeat_count < 1) {
      throw Error(ErrorKind::kInvalidArgument,
                  "run with repeat_count " + std::to_string(run.repeat_count));
    }
    if (!vocab.IsPrimitive(run.primitive_id)) {
      throw Error(ErrorKind::kInvalidArgument,
                  "primitive id " + std::to_string(run.primitive_id) +
                      " outside vocabulary");
    }
    if (run.pen_up_move) out.ids.push_back(vocab.sep());
    out.ids.insert(out.ids.end(), run.repeat_count, run.primitive_id);
  }
  out.ids.push_back(vocab.eos());
  out.attention_length = out.ids.size();
  return out;
}

AbstractedSketch Decode(std::span<const int> ids, const Vocabulary& vocab) {
  if (ids.empty() || ids[0] != vocab.bos()) {
    throw TokenError(0, "missing BOS");
  }
  AbstractedSketch out;
  bool pending_sep = false;
  for (std::size_t i = 1; i < ids.size(); ++i) {
    const int id = ids[i];
    if (!vocab.IsValid(id)) throw TokenError(i, "unknown token id " + std::to_string(id));
    if (id == vocab.eos()) {
      if (pending_sep) throw TokenError(i - 1, "SEP in terminal position");
      return out;
    }
    if (id == vocab.bos()) throw TokenError(i, "BOS after start");
    if (id == vocab.pad()) throw TokenError(i, "PAD before EOS");
    if (id == vocab.sep()) {
      if (pending_sep) throw TokenError(i, "consecutive SEP");
      pending_sep = true;
      continue;
    }
    if (!pending_sep && !out.runs.empty() &&
        out.runs.back().primitive_id == id) {
      ++out.runs.back().repeat_count;
    } else {
      out.runs.push_back({id, 1, pending_sep});
    }
    pending_sep = false;
  }
  throw TokenError(ids.size(), "missing EOS");
}

AbstractedSketch Decode(const TokenSequence& tokens, const Vocabulary& vocab) {
  return Decode(std::span<const int>(tokens.ids), vocab);
}

AbstractedSketch Canonicalize(const AbstractedSketch& abstracted) {
  AbstractedSketch out;
  for (const PrimitiveRun& run : abstracted.runs) {
    if (!run.pen_up_move && !out.runs.empty() &&
        out.runs.back().primitive_id == run.primitive_id) {
      out.runs.back().repeat_count += run.repeat_count;
    } else {
      out.runs.push_back(run);
    }
  }
  return out;
}

bool IsCanonical(const AbstractedSketch& abstracted) {
  for (std::size_t i = 1; i < abstracted.runs.size(); ++i) {
    const PrimitiveRun& run = abstracted.runs[i];
    if (!run.pen_up_move &&
        run.primitive_id == abstracted.runs[i - 1].primitive_id) {
      return false;
    }
  }
  return true;
}

PadResult PadOrTruncate(const TokenSequence& tokens, std::size_t max_len,
                        const Vocabulary& vocab) {
  if (max_len < 3) {
    throw Error(ErrorKind::kInvalidArgument, "max_len must be at least 3");
  }
  PadResult result;
  if (tokens.ids.size() <= max_len) {
    result.tokens = tokens;
    result.tokens.ids.resize(max_len, vocab.pad());
    return result;
  }
  result.truncated = true;
  std::vector<int> ids(tokens.ids.begin(), tokens.ids.begin() + (max_len - 1));
  if (ids.back() == vocab.sep()) ids.pop_back();
  ids.push_back(vocab.eos());
  result.tokens.attention_length = ids.size();
  ids.resize(max_len, vocab.pad());
  result.tokens.ids = std::move(ids);
  return result;
}

std::size_t EncodedLength(const AbstractedSketch& abstracted) {
  std::size_t n = 2;
  for (const PrimitiveRun& run : abstracted.runs) {
    n += static_cast<std::size_t>(run.repeat_count) + (run.pen_up_move ? 1 : 0);
  }
  return n;
}

std::string TokensToJson(std::span<const int> ids) {
  return nlohmann::json(std::vector<int>(ids.begin(), ids.end())).dump();
}

std::vector<int> TokensFromJson(const std::string& text) {
  try {
    return nlohmann::json::parse(text).get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("token json: ") + e.what());
  }
}

}  // namespace primsketch

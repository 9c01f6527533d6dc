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

#include "primsketch/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Core>

#include "primsketch/error.h"

namespace primsketch {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using StridedMap = Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using ConstStridedMap = Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using VecMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;

template <typename T>
bool Tracking(Tape<T>* tape, std::initializer_list<const Tensor<T>*> inputs) {
  if (tape == nullptr) return false;
  for (const Tensor<T>* t : inputs) {
    if (t->defined() && t->requires_grad()) return true;
  }
  return false;
}

template <typename T>
MatMap<T> AsMatrix(std::span<T> data, std::int64_t rows, std::int64_t cols) {
  return MatMap<T>(data.data(), rows, cols);
}

template <typename T>
ConstMatMap<T> AsMatrix(std::span<const T> data, std::int64_t rows,
                        std::int64_t cols) {
  return ConstMatMap<T>(data.data(), rows, cols);
}

template <typename T>
void RequireRank(const Tensor<T>& t, int rank, const char* op) {
  if (!t.defined() || t.rank() != rank) {
    throw Error(ErrorKind::kShapeMismatch,
                std::string(op) + ": expected rank " + std::to_string(rank) +
                    ", got " + (t.defined() ? ShapeString(t.shape()) : "none"));
  }
}

template <typename T>
void RequireSameShape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorKind::kShapeMismatch, std::string(op) + ": shapes " +
                                               ShapeString(a.shape()) + " and " +
                                               ShapeString(b.shape()) +
                                               " differ");
  }
}

template <typename T>
T GeluValue(T x) {
  const T c = static_cast<T>(std::sqrt(2.0 / std::numbers::pi));
  return T(0.5) * x * (T(1) + std::tanh(c * (x + T(0.044715) * x * x * x)));
}

template <typename T>
T GeluDerivative(T x) {
  const T c = static_cast<T>(std::sqrt(2.0 / std::numbers::pi));
  const T inner = c * (x + T(0.044715) * x * x * x);
  const T th = std::tanh(inner);
  const T dinner = c * (T(1) + T(3) * T(0.044715) * x * x);
  return T(0.5) * (T(1) + th) + T(0.5) * x * (T(1) - th * th) * dinner;
}

}  // namespace

template <typename T>
Tensor<T> MatMul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  RequireRank(a, 2, "matmul");
  RequireRank(b, 2, "matmul");
  const std::int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw Error(ErrorKind::kShapeMismatch,
                "matmul: inner extents differ for " + ShapeString(a.shape()) +
                    " and " + ShapeString(b.shape()));
  }
  const bool track = Tracking(tape, {&a, &b});
  Tensor<T> out = Tensor<T>::Zeros({m, n}, track);
  AsMatrix(out.values(), m, n).noalias() =
      AsMatrix(a.values(), m, k) * AsMatrix(b.values(), k, n);
  if (track) {
    tape->Record(out, [a, b, out, m, k, n]() mutable {
      auto g = AsMatrix(std::span<const T>(out.grad()), m, n);
      if (a.requires_grad()) {
        AsMatrix(a.grad(), m, k).noalias() +=
            g * AsMatrix(b.values(), k, n).transpose();
      }
      if (b.requires_grad()) {
        AsMatrix(b.grad(), k, n).noalias() +=
            AsMatrix(a.values(), m, k).transpose() * g;
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> MatMulTransposed(Tape<T>* tape, const Tensor<T>& a,
                           const Tensor<T>& b) {
  RequireRank(a, 2, "matmul_transposed");
  RequireRank(b, 2, "matmul_transposed");
  const std::int64_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k) {
    throw Error(ErrorKind::kShapeMismatch,
                "matmul_transposed: inner extents differ for " +
                    ShapeString(a.shape()) + " and " + ShapeString(b.shape()));
  }
  const bool track = Tracking(tape, {&a, &b});
  Tensor<T> out = Tensor<T>::Zeros({m, n}, track);
  AsMatrix(out.values(), m, n).noalias() =
      AsMatrix(a.values(), m, k) * AsMatrix(b.values(), n, k).transpose();
  if (track) {
    tape->Record(out, [a, b, out, m, k, n]() mutable {
      auto g = AsMatrix(std::span<const T>(out.grad()), m, n);
      if (a.requires_grad()) {
        AsMatrix(a.grad(), m, k).noalias() += g * AsMatrix(b.values(), n, k);
      }
      if (b.requires_grad()) {
        AsMatrix(b.grad(), n, k).noalias() +=
            g.transpose() * AsMatrix(a.values(), m, k);
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Linear(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& w,
                 const Tensor<T>& bias) {
  RequireRank(x, 2, "linear");
  RequireRank(w, 2, "linear");
  const std::int64_t n = x.dim(0), in = x.dim(1), out_dim = w.dim(1);
  if (w.dim(0) != in) {
    throw Error(ErrorKind::kShapeMismatch,
                "linear: input " + ShapeString(x.shape()) + " vs weight " +
                    ShapeString(w.shape()));
  }
  const bool has_bias = bias.defined();
  if (has_bias && (bias.rank() != 1 || bias.dim(0) != out_dim)) {
    throw Error(ErrorKind::kShapeMismatch,
                "linear: bias " + ShapeString(bias.shape()) + " vs weight " +
                    ShapeString(w.shape()));
  }
  const bool track = Tracking(tape, {&x, &w, &bias});
  Tensor<T> out = Tensor<T>::Zeros({n, out_dim}, track);
  auto y = AsMatrix(out.values(), n, out_dim);
  y.noalias() = AsMatrix(x.values(), n, in) * AsMatrix(w.values(), in, out_dim);
  if (has_bias) {
    y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(
        bias.values().data(), out_dim);
  }
  if (track) {
    tape->Record(out, [x, w, bias, out, n, in, out_dim, has_bias]() mutable {
      auto g = AsMatrix(std::span<const T>(out.grad()), n, out_dim);
      if (x.requires_grad()) {
        AsMatrix(x.grad(), n, in).noalias() +=
            g * AsMatrix(w.values(), in, out_dim).transpose();
      }
      if (w.requires_grad()) {
        AsMatrix(w.grad(), in, out_dim).noalias() +=
            AsMatrix(x.values(), n, in).transpose() * g;
      }
      if (has_bias && bias.requires_grad()) {
        AsMatrix(bias.grad(), 1, out_dim) += g.colwise().sum();
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Add(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  RequireSameShape(a, b, "add");
  const bool track = Tracking(tape, {&a, &b});
  Tensor<T> out = Tensor<T>::Zeros(a.shape(), track);
  auto av = a.values();
  auto bv = b.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
  if (track) {
    tape->Record(out, [a, b, out]() mutable {
      auto g = std::span<const T>(out.grad());
      if (a.requires_grad()) {
        auto ag = a.grad();
        for (std::size_t i = 0; i < g.size(); ++i) ag[i] += g[i];
      }
      if (b.requires_grad()) {
        auto bg = b.grad();
        for (std::size_t i = 0; i < g.size(); ++i) bg[i] += g[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Mul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  RequireSameShape(a, b, "mul");
  const bool track = Tracking(tape, {&a, &b});
  Tensor<T> out = Tensor<T>::Zeros(a.shape(), track);
  auto av = a.values();
  auto bv = b.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
  if (track) {
    tape->Record(out, [a, b, out]() mutable {
      auto g = std::span<const T>(out.grad());
      if (a.requires_grad()) {
        auto ag = a.grad();
        auto bv = b.values();
        for (std::size_t i = 0; i < g.size(); ++i) ag[i] += g[i] * bv[i];
      }
      if (b.requires_grad()) {
        auto bg = b.grad();
        auto av = a.values();
        for (std::size_t i = 0; i < g.size(); ++i) bg[i] += g[i] * av[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Scale(Tape<T>* tape, const Tensor<T>& x, T factor) {
  const bool track = Tracking(tape, {&x});
  Tensor<T> out = Tensor<T>::Zeros(x.shape(), track);
  auto xv = x.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = xv[i] * factor;
  if (track) {
    tape->Record(out, [x, out, factor]() mutable {
      auto g = std::span<const T>(out.grad());
      auto xg = x.grad();
      for (std::size_t i = 0; i < g.size(); ++i) xg[i] += g[i] * factor;
    });
  }
  return out;
}

template <typename T>
Tensor<T> Sum(Tape<T>* tape, const Tensor<T>& x) {
  const bool track = Tracking(tape, {&x});
  T total = T(0);
  for (T v : x.values()) total += v;
  Tensor<T> out = Tensor<T>::Scalar(total, track);
  if (track) {
    tape->Record(out, [x, out]() mutable {
      const T g = out.grad()[0];
      for (T& xg : x.grad()) xg += g;
    });
  }
  return out;
}

template <typename T>
Tensor<T> Softmax(Tape<T>* tape, const Tensor<T>& x) {
  if (x.rank() < 1) {
    throw Error(ErrorKind::kShapeMismatch, "softmax needs rank >= 1");
  }
  const bool track = Tracking(tape, {&x});
  const std::int64_t cols = x.dim(-1);
  const std::int64_t rows = cols == 0 ? 0 : static_cast<std::int64_t>(x.numel()) / cols;
  Tensor<T> out = Tensor<T>::Zeros(x.shape(), track);
  auto xv = x.values();
  auto ov = out.values();
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* in = xv.data() + r * cols;
    T* o = ov.data() + r * cols;
    const T mx = *std::max_element(in, in + cols);
    T denom = T(0);
    for (std::int64_t c = 0; c < cols; ++c) {
      o[c] = std::exp(in[c] - mx);
      denom += o[c];
    }
    for (std::int64_t c = 0; c < cols; ++c) o[c] /= denom;
  }
  if (track) {
    tape->Record(out, [x, out, rows, cols]() mutable {
      auto g = std::span<const T>(out.grad());
      auto y = std::span<const T>(out.values());
      auto xg = x.grad();
      for (std::int64_t r = 0; r < rows; ++r) {
        T dot = T(0);
        for (std::int64_t c = 0; c < cols; ++c) {
          dot += g[r * cols + c] * y[r * cols + c];
        }
        for (std::int64_t c = 0; c < cols; ++c) {
          xg[r * cols + c] += y[r * cols + c] * (g[r * cols + c] - dot);
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> LayerNorm(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& gain,
                    const Tensor<T>& bias, T eps) {
  RequireRank(x, 2, "layer_norm");
  if (!(eps > T(0))) {
    throw Error(ErrorKind::kInvalidArgument, "layer_norm: eps must be > 0");
  }
  const std::int64_t n = x.dim(0), d = x.dim(1);
  if (gain.numel() != static_cast<std::size_t>(d) ||
      bias.numel() != static_cast<std::size_t>(d)) {
    throw Error(ErrorKind::kShapeMismatch,
                "layer_norm: gain/bias must have " + std::to_string(d) +
                    " entries");
  }
  const bool track = Tracking(tape, {&x, &gain, &bias});
  Tensor<T> out = Tensor<T>::Zeros(x.shape(), track);
  AlignedVector<T> xhat(track ? x.numel() : 0);
  std::vector<T> rstd(track ? n : 0);
  auto xv = x.values();
  auto gv = gain.values();
  auto bv = bias.values();
  auto ov = out.values();
  for (std::int64_t r = 0; r < n; ++r) {
    const T* row = xv.data() + r * d;
    T mean = T(0);
    for (std::int64_t c = 0; c < d; ++c) mean += row[c];
    mean /= static_cast<T>(d);
    T var = T(0);
    for (std::int64_t c = 0; c < d; ++c) var += (row[c] - mean) * (row[c] - mean);
    var /= static_cast<T>(d);
    const T inv = T(1) / std::sqrt(var + eps);
    for (std::int64_t c = 0; c < d; ++c) {
      const T h = (row[c] - mean) * inv;
      ov[r * d + c] = h * gv[c] + bv[c];
      if (track) xhat[r * d + c] = h;
    }
    if (track) rstd[r] = inv;
  }
  if (track) {
    tape->Record(out, [x, gain, bias, out, n, d, xhat = std::move(xhat),
                       rstd = std::move(rstd)]() mutable {
      auto g = std::span<const T>(out.grad());
      auto gv = gain.values();
      if (gain.requires_grad() || bias.requires_grad()) {
        for (std::int64_t r = 0; r < n; ++r) {
          for (std::int64_t c = 0; c < d; ++c) {
            if (gain.requires_grad()) gain.grad()[c] += g[r * d + c] * xhat[r * d + c];
            if (bias.requires_grad()) bias.grad()[c] += g[r * d + c];
          }
        }
      }
      if (x.requires_grad()) {
        auto xg = x.grad();
        for (std::int64_t r = 0; r < n; ++r) {
          T mean_dh = T(0), mean_dh_h = T(0);
          for (std::int64_t c = 0; c < d; ++c) {
            const T dh = g[r * d + c] * gv[c];
            mean_dh += dh;
            mean_dh_h += dh * xhat[r * d + c];
          }
          mean_dh /= static_cast<T>(d);
          mean_dh_h /= static_cast<T>(d);
          for (std::int64_t c = 0; c < d; ++c) {
            const T dh = g[r * d + c] * gv[c];
            xg[r * d + c] +=
                rstd[r] * (dh - mean_dh - xhat[r * d + c] * mean_dh_h);
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Gelu(Tape<T>* tape, const Tensor<T>& x) {
  const bool track = Tracking(tape, {&x});
  Tensor<T> out = Tensor<T>::Zeros(x.shape(), track);
  auto xv = x.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = GeluValue(xv[i]);
  if (track) {
    tape->Record(out, [x, out]() mutable {
      auto g = std::span<const T>(out.grad());
      auto xv = x.values();
      auto xg = x.grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        xg[i] += g[i] * GeluDerivative(xv[i]);
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Embedding(Tape<T>* tape, const Tensor<T>& table,
                    std::span<const int> ids) {
  RequireRank(table, 2, "embedding");
  const std::int64_t vocab = table.dim(0), h = table.dim(1);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= vocab) {
      throw Error(ErrorKind::kInvalidArgument,
                  "embedding: id " + std::to_string(ids[i]) + " at position " +
                      std::to_string(i) + " outside table of " +
                      std::to_string(vocab) + " rows");
    }
  }
  const bool track = Tracking(tape, {&table});
  const auto n = static_cast<std::int64_t>(ids.size());
  Tensor<T> out = Tensor<T>::Zeros({n, h}, track);
  auto tv = table.values();
  auto ov = out.values();
  for (std::int64_t i = 0; i < n; ++i) {
    std::copy_n(tv.data() + ids[i] * h, h, ov.data() + i * h);
  }
  if (track) {
    std::vector<int> saved(ids.begin(), ids.end());
    tape->Record(out, [table, out, h, saved = std::move(saved)]() mutable {
      auto g = std::span<const T>(out.grad());
      auto tg = table.grad();
      for (std::size_t i = 0; i < saved.size(); ++i) {
        T* dst = tg.data() + saved[i] * h;
        const T* src = g.data() + i * h;
        for (std::int64_t c = 0; c < h; ++c) dst[c] += src[c];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> GatherRows(Tape<T>* tape, const Tensor<T>& x,
                     std::span<const std::int64_t> rows) {
  RequireRank(x, 2, "gather_rows");
  const std::int64_t n = x.dim(0), d = x.dim(1);
  for (std::int64_t r : rows) {
    if (r < 0 || r >= n) {
      throw Error(ErrorKind::kInvalidArgument,
                  "gather_rows: row " + std::to_string(r) + " out of range");
    }
  }
  const bool track = Tracking(tape, {&x});
  Tensor<T> out =
      Tensor<T>::Zeros({static_cast<std::int64_t>(rows.size()), d}, track);
  auto xv = x.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(xv.data() + rows[i] * d, d, ov.data() + i * d);
  }
  if (track) {
    std::vector<std::int64_t> saved(rows.begin(), rows.end());
    tape->Record(out, [x, out, d, saved = std::move(saved)]() mutable {
      auto g = std::span<const T>(out.grad());
      auto xg = x.grad();
      for (std::size_t i = 0; i < saved.size(); ++i) {
        for (std::int64_t c = 0; c < d; ++c) {
          xg[saved[i] * d + c] += g[i * d + c];
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> CrossEntropy(Tape<T>* tape, const Tensor<T>& logits,
                       std::span<const int> targets, int ignore_id) {
  RequireRank(logits, 2, "cross_entropy");
  const std::int64_t n = logits.dim(0), v = logits.dim(1);
  if (static_cast<std::int64_t>(targets.size()) != n) {
    throw Error(ErrorKind::kShapeMismatch,
                "cross_entropy: " + std::to_string(targets.size()) +
                    " targets for " + std::to_string(n) + " rows");
  }
  std::int64_t count = 0;
  for (std::int64_t r = 0; r < n; ++r) {
    const int t = targets[r];
    if (t == ignore_id) continue;
    if (t < 0 || t >= v) {
      throw Error(ErrorKind::kInvalidArgument,
                  "cross_entropy: target " + std::to_string(t) +
                      " out of range at row " + std::to_string(r));
    }
    ++count;
  }
  if (count == 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "cross_entropy: no contributing positions");
  }
  const bool track = Tracking(tape, {&logits});
  auto lv = logits.values();
  AlignedVector<T> probs(track ? logits.numel() : 0);
  // Accumulate in double so the float path's mean does not depend on row
  // count rounding.
  double total = 0.0;
  for (std::int64_t r = 0; r < n; ++r) {
    if (targets[r] == ignore_id) continue;
    const T* row = lv.data() + r * v;
    const T mx = *std::max_element(row, row + v);
    T denom = T(0);
    for (std::int64_t c = 0; c < v; ++c) denom += std::exp(row[c] - mx);
    const T log_denom = std::log(denom);
    total += static_cast<double>(log_denom + mx - row[targets[r]]);
    if (track) {
      for (std::int64_t c = 0; c < v; ++c) {
        probs[r * v + c] = std::exp(row[c] - mx - log_denom);
      }
    }
  }
  Tensor<T> out =
      Tensor<T>::Scalar(static_cast<T>(total / static_cast<double>(count)), track);
  if (track) {
    std::vector<int> saved(targets.begin(), targets.end());
    tape->Record(out, [logits, out, n, v, count, ignore_id,
                       saved = std::move(saved),
                       probs = std::move(probs)]() mutable {
      const T g = out.grad()[0] / static_cast<T>(count);
      auto lg = logits.grad();
      for (std::int64_t r = 0; r < n; ++r) {
        if (saved[r] == ignore_id) continue;
        for (std::int64_t c = 0; c < v; ++c) {
          lg[r * v + c] += g * probs[r * v + c];
        }
        lg[r * v + saved[r]] -= g;
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Dropout(Tape<T>* tape, const Tensor<T>& x, double p,
                  std::mt19937_64& rng) {
  if (p <= 0.0) return x;
  if (p >= 1.0) {
    throw Error(ErrorKind::kInvalidArgument, "dropout probability must be < 1");
  }
  const bool track = Tracking(tape, {&x});
  Tensor<T> out = Tensor<T>::Zeros(x.shape(), track);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  std::vector<T> mask(x.numel());
  auto xv = x.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    mask[i] = u < p ? T(0) : keep_scale;
    ov[i] = xv[i] * mask[i];
  }
  if (track) {
    tape->Record(out, [x, out, mask = std::move(mask)]() mutable {
      auto g = std::span<const T>(out.grad());
      auto xg = x.grad();
      for (std::size_t i = 0; i < g.size(); ++i) xg[i] += g[i] * mask[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> CausalSelfAttention(Tape<T>* tape, const Tensor<T>& q,
                              const Tensor<T>& k, const Tensor<T>& v,
                              const AttentionLayout& layout,
                              std::vector<T>* probs_out) {
  RequireRank(q, 2, "attention");
  RequireSameShape(q, k, "attention");
  RequireSameShape(q, v, "attention");
  const std::int64_t B = layout.batch, S = layout.seq_len, A = layout.heads;
  const std::int64_t H = q.dim(1);
  if (q.dim(0) != B * S) {
    throw Error(ErrorKind::kShapeMismatch,
                "attention: " + std::to_string(q.dim(0)) + " rows for batch " +
                    std::to_string(B) + " x seq " + std::to_string(S));
  }
  if (A < 1 || H % A != 0) {
    throw Error(ErrorKind::kShapeMismatch,
                "attention: hidden " + std::to_string(H) +
                    " not divisible by heads " + std::to_string(A));
  }
  if (static_cast<std::int64_t>(layout.key_valid.size()) != B * S) {
    throw Error(ErrorKind::kShapeMismatch, "attention: key mask size mismatch");
  }
  const bool use_dropout = layout.dropout > 0.0;
  if (use_dropout && layout.rng == nullptr) {
    throw Error(ErrorKind::kInvalidArgument, "attention dropout needs an rng");
  }
  const std::int64_t D = H / A;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(D)));
  const T neg_inf = -std::numeric_limits<T>::infinity();
  const bool track = Tracking(tape, {&q, &k, &v});

  Tensor<T> out = Tensor<T>::Zeros({B * S, H}, track);
  // probs holds the post-softmax weights; dropped holds the weights actually
  // applied to V (equal to probs without dropout).
  AlignedVector<T> probs(static_cast<std::size_t>(B * A * S * S));
  AlignedVector<T> dropped;
  if (use_dropout) dropped.resize(probs.size());
  RowMat<T> scores(S, S);

  auto qv = q.values();
  auto kv = k.values();
  auto vv = v.values();
  auto ov = out.values();
  for (std::int64_t b = 0; b < B; ++b) {
    const std::uint8_t* valid = layout.key_valid.data() + b * S;
    for (std::int64_t h = 0; h < A; ++h) {
      const std::int64_t off = b * S * H + h * D;
      ConstStridedMap<T> Q(qv.data() + off, S, D, Eigen::OuterStride<>(H));
      ConstStridedMap<T> K(kv.data() + off, S, D, Eigen::OuterStride<>(H));
      ConstStridedMap<T> V(vv.data() + off, S, D, Eigen::OuterStride<>(H));
      StridedMap<T> O(ov.data() + off, S, D, Eigen::OuterStride<>(H));
      scores.noalias() = (Q * K.transpose()) * scale;
      MatMap<T> P(probs.data() + (b * A + h) * S * S, S, S);
      for (std::int64_t i = 0; i < S; ++i) {
        T mx = neg_inf;
        for (std::int64_t j = 0; j < S; ++j) {
          if (j > i || !valid[j]) scores(i, j) = neg_inf;
          mx = std::max(mx, scores(i, j));
        }
        if (mx == neg_inf) {
          // No attendable key: the row contributes nothing.
          P.row(i).setZero();
          continue;
        }
        T denom = T(0);
        for (std::int64_t j = 0; j < S; ++j) {
          const T e = scores(i, j) == neg_inf ? T(0) : std::exp(scores(i, j) - mx);
          P(i, j) = e;
          denom += e;
        }
        P.row(i) /= denom;
      }
      if (use_dropout) {
        MatMap<T> PD(dropped.data() + (b * A + h) * S * S, S, S);
        const T keep_scale = static_cast<T>(1.0 / (1.0 - layout.dropout));
        for (std::int64_t i = 0; i < S; ++i) {
          for (std::int64_t j = 0; j < S; ++j) {
            const double u =
                static_cast<double>((*layout.rng)() >> 11) * 0x1.0p-53;
            PD(i, j) = u < layout.dropout ? T(0) : P(i, j) * keep_scale;
          }
        }
        O.noalias() = PD * V;
      } else {
        O.noalias() = P * V;
      }
    }
  }
  if (probs_out != nullptr) probs_out->assign(probs.begin(), probs.end());

  if (track) {
    tape->Record(out, [q, k, v, out, B, S, A, H, D, scale, use_dropout,
                       keep_scale = static_cast<T>(use_dropout ? 1.0 / (1.0 - layout.dropout) : 1.0),
                       probs = std::move(probs),
                       dropped = std::move(dropped)]() mutable {
      auto g = std::span<const T>(out.grad());
      RowMat<T> dP(S, S);
      auto qv = q.values();
      auto kv = k.values();
      auto vv = v.values();
      for (std::int64_t b = 0; b < B; ++b) {
        for (std::int64_t h = 0; h < A; ++h) {
          const std::int64_t off = b * S * H + h * D;
          ConstStridedMap<T> Q(qv.data() + off, S, D, Eigen::OuterStride<>(H));
          ConstStridedMap<T> K(kv.data() + off, S, D, Eigen::OuterStride<>(H));
          ConstStridedMap<T> V(vv.data() + off, S, D, Eigen::OuterStride<>(H));
          ConstStridedMap<T> G(g.data() + off, S, D, Eigen::OuterStride<>(H));
          ConstMatMap<T> P(probs.data() + (b * A + h) * S * S, S, S);
          if (v.requires_grad()) {
            StridedMap<T> dV(v.grad().data() + off, S, D, Eigen::OuterStride<>(H));
            if (use_dropout) {
              ConstMatMap<T> PD(dropped.data() + (b * A + h) * S * S, S, S);
              dV.noalias() += PD.transpose() * G;
            } else {
              dV.noalias() += P.transpose() * G;
            }
          }
          if (!q.requires_grad() && !k.requires_grad()) continue;
          dP.noalias() = G * V.transpose();
          if (use_dropout) {
            ConstMatMap<T> PD(dropped.data() + (b * A + h) * S * S, S, S);
            for (std::int64_t i = 0; i < S; ++i) {
              for (std::int64_t j = 0; j < S; ++j) {
                if (PD(i, j) == T(0)) dP(i, j) = T(0);
                else dP(i, j) *= keep_scale;
              }
            }
          }
          // dS = P .* (dP - rowsum(dP .* P)), then fold in the 1/sqrt(d) scale.
          for (std::int64_t i = 0; i < S; ++i) {
            T dot = T(0);
            for (std::int64_t j = 0; j <= i; ++j) dot += dP(i, j) * P(i, j);
            for (std::int64_t j = 0; j < S; ++j) {
              dP(i, j) = j <= i ? P(i, j) * (dP(i, j) - dot) * scale : T(0);
            }
          }
          if (q.requires_grad()) {
            StridedMap<T> dQ(q.grad().data() + off, S, D, Eigen::OuterStride<>(H));
            dQ.noalias() += dP * K;
          }
          if (k.requires_grad()) {
            StridedMap<T> dK(k.grad().data() + off, S, D, Eigen::OuterStride<>(H));
            dK.noalias() += dP.transpose() * Q;
          }
        }
      }
    });
  }
  return out;
}

#define PRIMSKETCH_INSTANTIATE_OPS(T)                                          \
  template Tensor<T> MatMul(Tape<T>*, const Tensor<T>&, const Tensor<T>&);    \
  template Tensor<T> MatMulTransposed(Tape<T>*, const Tensor<T>&,              \
                                      const Tensor<T>&);                       \
  template Tensor<T> Linear(Tape<T>*, const Tensor<T>&, const Tensor<T>&,      \
                            const Tensor<T>&);                                 \
  template Tensor<T> Add(Tape<T>*, const Tensor<T>&, const Tensor<T>&);       \
  template Tensor<T> Mul(Tape<T>*, const Tensor<T>&, const Tensor<T>&);       \
  template Tensor<T> Scale(Tape<T>*, const Tensor<T>&, T);                     \
  template Tensor<T> Sum(Tape<T>*, const Tensor<T>&);                          \
  template Tensor<T> Softmax(Tape<T>*, const Tensor<T>&);                      \
  template Tensor<T> LayerNorm(Tape<T>*, const Tensor<T>&, const Tensor<T>&,   \
                               const Tensor<T>&, T);                           \
  template Tensor<T> Gelu(Tape<T>*, const Tensor<T>&);                         \
  template Tensor<T> Embedding(Tape<T>*, const Tensor<T>&,                     \
                               std::span<const int>);                          \
  template Tensor<T> GatherRows(Tape<T>*, const Tensor<T>&,                    \
                                std::span<const std::int64_t>);                \
  template Tensor<T> CrossEntropy(Tape<T>*, const Tensor<T>&,                  \
                                  std::span<const int>, int);                  \
  template Tensor<T> Dropout(Tape<T>*, const Tensor<T>&, double,               \
                             std::mt19937_64&);                                \
  template Tensor<T> CausalSelfAttention(Tape<T>*, const Tensor<T>&,           \
                                         const Tensor<T>&, const Tensor<T>&,   \
                                         const AttentionLayout&,               \
                                         std::vector<T>*);

PRIMSKETCH_INSTANTIATE_OPS(float)
PRIMSKETCH_INSTANTIATE_OPS(double)

#undef PRIMSKETCH_INSTANTIATE_OPS

}  // namespace primsketch

// Copyright 2026 The cuctx Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cuctx/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>
#include <sstream>

#include "cuctx/error.hpp"

namespace cuctx {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kDegenerateRow: return "degenerate_row";
    case ErrorKind::kLength: return "length";
    case ErrorKind::kVocab: return "vocab";
    case ErrorKind::kNumeric: return "numeric";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kCapacity: return "capacity";
    case ErrorKind::kSpec: return "spec";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kManifest: return "manifest";
  }
  return "unknown";
}

namespace {

std::size_t element_count(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) fail(ErrorKind::kDimension, "negative dimension in tensor shape");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

void require_rank(const Tensor& t, int rank, const char* what) {
  if (t.rank() != rank) {
    fail(ErrorKind::kDimension, std::string(what) + ": expected rank " + std::to_string(rank) +
                                    ", got " + t.shape_string());
  }
}

}  // namespace

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), data_(element_count(shape_), 0.0) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (element_count(shape_) != data_.size()) {
    fail(ErrorKind::kDimension, "tensor data length " + std::to_string(data_.size()) +
                                    " does not match shape " + shape_str(shape_));
  }
}

Tensor Tensor::full(std::vector<int> shape, double value) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r ? static_cast<int>(rows.begin()->size()) : 0;
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(r * c));
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != c) fail(ErrorKind::kDimension, "ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

int Tensor::rows() const {
  require_rank(*this, 2, "rows()");
  return shape_[0];
}

int Tensor::cols() const {
  require_rank(*this, 2, "cols()");
  return shape_[1];
}

std::span<double> Tensor::row(int r) {
  const auto c = static_cast<std::size_t>(cols());
  return std::span<double>(data_).subspan(static_cast<std::size_t>(r) * c, c);
}

std::span<const double> Tensor::row(int r) const {
  const auto c = static_cast<std::size_t>(cols());
  return std::span<const double>(data_).subspan(static_cast<std::size_t>(r) * c, c);
}

Tensor Tensor::reshaped(std::vector<int> shape) const {
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const { return shape_str(shape_); }

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) return false;
  return a.size() == 0 ||
         std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(double)) == 0;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) fail(ErrorKind::kDimension, "max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

int BoolMatrix::row_count(int r) const {
  int n = 0;
  for (int c = 0; c < cols_; ++c) n += (*this)(r, c) ? 1 : 0;
  return n;
}

BatchNormState BatchNormState::identity(int channels) {
  return {Tensor::zeros({channels}), Tensor::full({channels}, 1.0)};
}

namespace ops {

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  if (a.cols() != b.rows()) {
    fail(ErrorKind::kDimension,
         "matmul: inner dimensions differ " + a.shape_string() + " x " + b.shape_string());
  }
  const int m = a.rows(), k = a.cols(), n = b.cols();
  Tensor c({m, n});
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      const double av = a(i, p);
      if (av == 0.0) continue;
      for (int j = 0; j < n; ++j) c(i, j) += av * b(p, j);
    }
  }
  return c;
}

Tensor matmul_bt(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul_bt");
  require_rank(b, 2, "matmul_bt");
  if (a.cols() != b.cols()) {
    fail(ErrorKind::kDimension,
         "matmul_bt: inner dimensions differ " + a.shape_string() + " x " + b.shape_string());
  }
  const int m = a.rows(), k = a.cols(), n = b.rows();
  Tensor c({m, n});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += a(i, p) * b(j, p);
      c(i, j) = s;
    }
  }
  return c;
}

Tensor matmul_at(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul_at");
  require_rank(b, 2, "matmul_at");
  if (a.rows() != b.rows()) {
    fail(ErrorKind::kDimension,
         "matmul_at: inner dimensions differ " + a.shape_string() + " x " + b.shape_string());
  }
  const int k = a.rows(), m = a.cols(), n = b.cols();
  Tensor c({m, n});
  for (int p = 0; p < k; ++p) {
    for (int i = 0; i < m; ++i) {
      const double av = a(p, i);
      if (av == 0.0) continue;
      for (int j = 0; j < n; ++j) c(i, j) += av * b(p, j);
    }
  }
  return c;
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  Tensor t({a.cols(), a.rows()});
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Tensor masked_softmax(const Tensor& logits, const BoolMatrix& mask) {
  require_rank(logits, 2, "masked_softmax");
  if (mask.rows() != logits.rows() || mask.cols() != logits.cols()) {
    fail(ErrorKind::kDimension, "masked_softmax: mask " + std::to_string(mask.rows()) + "x" +
                                    std::to_string(mask.cols()) + " vs logits " +
                                    logits.shape_string());
  }
  Tensor out({logits.rows(), logits.cols()});
  for (int r = 0; r < logits.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (int c = 0; c < logits.cols(); ++c) {
      if (!mask(r, c)) continue;
      any = true;
      mx = std::max(mx, logits(r, c));
    }
    if (!any) {
      fail(ErrorKind::kDegenerateRow,
           "masked_softmax: row " + std::to_string(r) + " has no allowed entries");
    }
    double sum = 0.0;
    for (int c = 0; c < logits.cols(); ++c) {
      if (!mask(r, c)) continue;
      const double e = std::exp(logits(r, c) - mx);
      out(r, c) = e;
      sum += e;
    }
    for (int c = 0; c < logits.cols(); ++c) out(r, c) /= sum;
  }
  return out;
}

Tensor softmax(const Tensor& logits) {
  return masked_softmax(logits, BoolMatrix(logits.rows(), logits.cols(), true));
}

Tensor log_softmax(const Tensor& logits) {
  require_rank(logits, 2, "log_softmax");
  Tensor out({logits.rows(), logits.cols()});
  for (int r = 0; r < logits.rows(); ++r) {
    auto in = logits.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (double v : in) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    auto o = out.row(r);
    for (std::size_t c = 0; c < in.size(); ++c) o[c] = in[c] - lse;
  }
  return out;
}

LayerNormResult layer_norm_ex(const Tensor& x, const Tensor& gain, const Tensor& bias) {
  require_rank(x, 2, "layer_norm");
  const int t = x.rows(), d = x.cols();
  if (d < 1) fail(ErrorKind::kDimension, "layer_norm: zero feature dimension");
  if (static_cast<int>(gain.size()) != d || static_cast<int>(bias.size()) != d) {
    fail(ErrorKind::kDimension, "layer_norm: affine parameters do not match width " +
                                    std::to_string(d));
  }
  LayerNormResult r{Tensor({t, d}), Tensor({t, d}), Tensor({t})};
  for (int i = 0; i < t; ++i) {
    auto row = x.row(i);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= d;
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= d;
    const double inv = 1.0 / std::sqrt(var + kNormEpsilon);
    r.inv_std[static_cast<std::size_t>(i)] = inv;
    for (int j = 0; j < d; ++j) {
      const double n = (row[static_cast<std::size_t>(j)] - mean) * inv;
      r.normalized(i, j) = n;
      r.out(i, j) = n * gain[static_cast<std::size_t>(j)] + bias[static_cast<std::size_t>(j)];
    }
  }
  return r;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias) {
  return layer_norm_ex(x, gain, bias).out;
}

BatchNormResult batch_norm_1d_ex(const Tensor& x, const BatchNormState& state,
                                 const Tensor& gain, const Tensor& bias, bool training) {
  require_rank(x, 2, "batch_norm_1d");
  const int channels = x.rows(), t = x.cols();
  if (t < 1) fail(ErrorKind::kLength, "batch_norm_1d: empty time axis");
  if (static_cast<int>(state.running_mean.size()) != channels ||
      static_cast<int>(state.running_var.size()) != channels ||
      static_cast<int>(gain.size()) != channels || static_cast<int>(bias.size()) != channels) {
    fail(ErrorKind::kDimension, "batch_norm_1d: state does not match " +
                                    std::to_string(channels) + " channels");
  }
  BatchNormResult r{Tensor({channels, t}), Tensor({channels, t}), Tensor({channels}), state};
  for (int c = 0; c < channels; ++c) {
    const auto ci = static_cast<std::size_t>(c);
    double mean, var;
    if (training) {
      mean = 0.0;
      for (double v : x.row(c)) mean += v;
      mean /= t;
      var = 0.0;
      for (double v : x.row(c)) var += (v - mean) * (v - mean);
      var /= t;
      // Biased variance so that converged running statistics reproduce the
      // training-mode normalisation exactly.
      r.state.running_mean[ci] =
          (1.0 - kBatchNormMomentum) * state.running_mean[ci] + kBatchNormMomentum * mean;
      r.state.running_var[ci] =
          (1.0 - kBatchNormMomentum) * state.running_var[ci] + kBatchNormMomentum * var;
    } else {
      mean = state.running_mean[ci];
      var = state.running_var[ci];
    }
    const double inv = 1.0 / std::sqrt(var + kNormEpsilon);
    r.inv_std[ci] = inv;
    for (int j = 0; j < t; ++j) {
      const double n = (x(c, j) - mean) * inv;
      r.normalized(c, j) = n;
      r.out(c, j) = n * gain[ci] + bias[ci];
    }
  }
  return r;
}

Tensor batch_norm_1d(const Tensor& x, const BatchNormState& state, bool training,
                     BatchNormState* updated) {
  const int channels = x.rank() == 2 ? x.rows() : 0;
  auto r = batch_norm_1d_ex(x, state, Tensor::full({channels}, 1.0), Tensor::zeros({channels}),
                            training);
  if (updated) *updated = std::move(r.state);
  return std::move(r.out);
}

Tensor pointwise_conv1d(const Tensor& x, const Tensor& w, const Tensor& bias) {
  Tensor out = matmul(x, w);
  if (static_cast<int>(bias.size()) != out.cols()) {
    fail(ErrorKind::kDimension, "pointwise_conv1d: bias width mismatch");
  }
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) += bias[static_cast<std::size_t>(j)];
  return out;
}

Tensor depthwise_conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias, bool causal) {
  require_rank(x, 2, "depthwise_conv1d");
  require_rank(kernel, 2, "depthwise_conv1d kernel");
  const int t = x.rows(), c = x.cols(), k = kernel.rows();
  if (kernel.cols() != c || static_cast<int>(bias.size()) != c) {
    fail(ErrorKind::kDimension, "depthwise_conv1d: kernel/bias channel mismatch");
  }
  if (!causal && k % 2 == 0) {
    fail(ErrorKind::kDimension, "depthwise_conv1d: symmetric padding needs an odd kernel");
  }
  if (t < 1) fail(ErrorKind::kLength, "depthwise_conv1d: empty input");
  const int offset = causal ? k - 1 : (k - 1) / 2;
  Tensor out({t, c});
  for (int i = 0; i < t; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      double s = bias[static_cast<std::size_t>(ch)];
      for (int j = 0; j < k; ++j) {
        const int src = i + j - offset;
        if (src < 0 || src >= t) continue;
        s += kernel(j, ch) * x(src, ch);
      }
      out(i, ch) = s;
    }
  }
  return out;
}

Conv2dGeometry conv2d_stride2_geometry(int time, int freq, bool causal) {
  if (time < 1 || freq < 1) {
    fail(ErrorKind::kLength, "conv2d_stride2: input " + std::to_string(time) + "x" +
                                 std::to_string(freq) + " is too small");
  }
  return {(time + 1) / 2, (freq + 1) / 2, causal ? 2 : 1};
}

Tensor conv2d_stride2(const Tensor& x, const Tensor& w, const Tensor& bias, bool causal) {
  require_rank(x, 3, "conv2d_stride2");
  require_rank(w, 4, "conv2d_stride2 kernel");
  const int cin = x.dim(0), time = x.dim(1), freq = x.dim(2);
  const int cout = w.dim(0);
  if (w.dim(1) != cin || w.dim(2) != 3 || w.dim(3) != 3 || static_cast<int>(bias.size()) != cout) {
    fail(ErrorKind::kDimension, "conv2d_stride2: kernel " + w.shape_string() +
                                    " incompatible with input " + x.shape_string());
  }
  const auto g = conv2d_stride2_geometry(time, freq, causal);
  Tensor out({cout, g.out_time, g.out_freq});
  auto xv = x.data();
  auto wv = w.data();
  auto ov = out.data();
  for (int o = 0; o < cout; ++o) {
    for (int ti = 0; ti < g.out_time; ++ti) {
      for (int fi = 0; fi < g.out_freq; ++fi) {
        double s = bias[static_cast<std::size_t>(o)];
        for (int ci = 0; ci < cin; ++ci) {
          for (int kt = 0; kt < 3; ++kt) {
            const int st = 2 * ti + kt - g.pad_time_left;
            if (st < 0 || st >= time) continue;
            for (int kf = 0; kf < 3; ++kf) {
              const int sf = 2 * fi + kf - 1;
              if (sf < 0 || sf >= freq) continue;
              s += wv[static_cast<std::size_t>(((o * cin + ci) * 3 + kt) * 3 + kf)] *
                   xv[static_cast<std::size_t>((ci * time + st) * freq + sf)];
            }
          }
        }
        ov[static_cast<std::size_t>((o * g.out_time + ti) * g.out_freq + fi)] = s;
      }
    }
  }
  return out;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor swish(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data()) v = v * sigmoid(v);
  return y;
}

Tensor glu(const Tensor& x) {
  require_rank(x, 2, "glu");
  if (x.cols() % 2 != 0) {
    fail(ErrorKind::kDimension, "glu: odd channel count " + std::to_string(x.cols()));
  }
  const int d = x.cols() / 2;
  Tensor y({x.rows(), d});
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < d; ++j) y(i, j) = x(i, j) * sigmoid(x(i, j + d));
  return y;
}

}  // namespace ops
}  // namespace cuctx

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

#include "cuctx/autograd.hpp"

#include <cmath>

#include "cuctx/error.hpp"

namespace cuctx {

const Tensor& Var::value() const { return tape_->value(id_); }

Tensor Var::grad() const {
  if (tape_->has_grad(id_)) return tape_->grad_ref(id_);
  return Tensor::zeros(value().shape());
}

bool Var::has_grad() const { return tape_->has_grad(id_); }

Var Tape::leaf(Tensor value) {
  nodes_.push_back({std::move(value), Tensor(), false, nullptr});
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::param(Parameter& p) {
  if (!grad_enabled_ || !p.trainable) return leaf(p.value);
  Parameter* target = &p;
  return record(p.value, [target](const Tensor& g, const Tensor&) {
    auto acc = target->grad.data();
    auto gv = g.data();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += gv[i];
  });
}

Var Tape::record(Tensor value, Backward backward) {
  if (!grad_enabled_) backward = nullptr;
  nodes_.push_back({std::move(value), Tensor(), false, std::move(backward)});
  return {this, static_cast<int>(nodes_.size() - 1)};
}

void Tape::accumulate(int id, const Tensor& g) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!g.same_shape(n.value)) {
    fail(ErrorKind::kDimension, "gradient shape " + g.shape_string() + " does not match value " +
                                    n.value.shape_string());
  }
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
    return;
  }
  auto acc = n.grad.data();
  auto gv = g.data();
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += gv[i];
}

void Tape::backward(Var root) {
  if (!grad_enabled_) fail(ErrorKind::kConfig, "backward() on a tape recorded without gradients");
  if (root.value().size() != 1) fail(ErrorKind::kDimension, "backward() needs a scalar root");
  accumulate(root.id(), Tensor::full(root.value().shape(), 1.0));
  for (int i = root.id(); i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.has_grad || !n.backward) continue;
    n.backward(n.grad, n.value);
  }
}

namespace {

Tape& tape_of(Var a, Var b) {
  if (a.tape() != b.tape()) fail(ErrorKind::kDimension, "operands live on different tapes");
  return *a.tape();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    fail(ErrorKind::kDimension,
         std::string(op) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  }
}

Tensor map(const Tensor& x, double (*f)(double)) {
  Tensor y = x;
  for (double& v : y.data()) v = f(v);
  return y;
}

}  // namespace

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tensor y = a.value();
  auto yv = y.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] += bv[i];
  const int ia = a.id(), ib = b.id();
  return t.record(std::move(y), [&t, ia, ib](const Tensor& g, const Tensor&) {
    t.accumulate(ia, g);
    t.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Tensor y = a.value();
  auto yv = y.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] -= bv[i];
  const int ia = a.id(), ib = b.id();
  return t.record(std::move(y), [&t, ia, ib](const Tensor& g, const Tensor&) {
    t.accumulate(ia, g);
    Tensor neg = g;
    for (double& v : neg.data()) v = -v;
    t.accumulate(ib, neg);
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  Tensor y = a.value();
  auto yv = y.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] *= bv[i];
  const int ia = a.id(), ib = b.id();
  return t.record(std::move(y), [&t, ia, ib](const Tensor& g, const Tensor&) {
    Tensor ga = g, gb = g;
    auto av = t.value(ia).data();
    auto bv = t.value(ib).data();
    for (std::size_t i = 0; i < ga.size(); ++i) {
      ga[i] *= bv[i];
      gb[i] *= av[i];
    }
    t.accumulate(ia, ga);
    t.accumulate(ib, gb);
  });
}

Var scale(Var a, double s) {
  Tape& t = *a.tape();
  Tensor y = a.value();
  for (double& v : y.data()) v *= s;
  const int ia = a.id();
  return t.record(std::move(y), [&t, ia, s](const Tensor& g, const Tensor&) {
    Tensor ga = g;
    for (double& v : ga.data()) v *= s;
    t.accumulate(ia, ga);
  });
}

Var add_row_bias(Var x, Var bias) {
  Tape& t = tape_of(x, bias);
  const Tensor& xv = x.value();
  const int rows = xv.rows(), cols = xv.cols();
  if (static_cast<int>(bias.value().size()) != cols) {
    fail(ErrorKind::kDimension, "add_row_bias: bias " + bias.value().shape_string() +
                                    " vs input " + xv.shape_string());
  }
  Tensor y = xv;
  const Tensor& bv = bias.value();
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) y(i, j) += bv[static_cast<std::size_t>(j)];
  const int ix = x.id(), ib = bias.id();
  return t.record(std::move(y), [&t, ix, ib](const Tensor& g, const Tensor&) {
    t.accumulate(ix, g);
    Tensor gb = Tensor::zeros(t.value(ib).shape());
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < g.cols(); ++j) gb[static_cast<std::size_t>(j)] += g(i, j);
    t.accumulate(ib, gb);
  });
}

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  Tensor y = ops::matmul(a.value(), b.value());
  const int ia = a.id(), ib = b.id();
  return t.record(std::move(y), [&t, ia, ib](const Tensor& g, const Tensor&) {
    t.accumulate(ia, ops::matmul_bt(g, t.value(ib)));
    t.accumulate(ib, ops::matmul_at(t.value(ia), g));
  });
}

Var matmul_bt(Var a, Var b) {
  Tape& t = tape_of(a, b);
  Tensor y = ops::matmul_bt(a.value(), b.value());
  const int ia = a.id(), ib = b.id();
  return t.record(std::move(y), [&t, ia, ib](const Tensor& g, const Tensor&) {
    t.accumulate(ia, ops::matmul(g, t.value(ib)));
    t.accumulate(ib, ops::matmul_at(g, t.value(ia)));
  });
}

Var transpose(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.record(ops::transpose(a.value()), [&t, ia](const Tensor& g, const Tensor&) {
    t.accumulate(ia, ops::transpose(g));
  });
}

Var linear(Var x, Var w, Var bias) { return add_row_bias(matmul(x, w), bias); }

Var relu(Var x) {
  Tape& t = *x.tape();
  const int ix = x.id();
  return t.record(ops::relu(x.value()), [&t, ix](const Tensor& g, const Tensor&) {
    Tensor gx = g;
    auto xv = t.value(ix).data();
    for (std::size_t i = 0; i < gx.size(); ++i)
      if (!(xv[i] > 0.0)) gx[i] = 0.0;
    t.accumulate(ix, gx);
  });
}

Var swish(Var x) {
  Tape& t = *x.tape();
  const int ix = x.id();
  return t.record(ops::swish(x.value()), [&t, ix](const Tensor& g, const Tensor&) {
    Tensor gx = g;
    auto xv = t.value(ix).data();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double s = ops::sigmoid(xv[i]);
      gx[i] *= s + xv[i] * s * (1.0 - s);
    }
    t.accumulate(ix, gx);
  });
}

Var sigmoid(Var x) {
  Tape& t = *x.tape();
  const int ix = x.id();
  return t.record(map(x.value(), ops::sigmoid), [&t, ix](const Tensor& g, const Tensor& y) {
    Tensor gx = g;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= y[i] * (1.0 - y[i]);
    t.accumulate(ix, gx);
  });
}

Var tanh(Var x) {
  Tape& t = *x.tape();
  const int ix = x.id();
  return t.record(map(x.value(), [](double v) { return std::tanh(v); }),
                  [&t, ix](const Tensor& g, const Tensor& y) {
                    Tensor gx = g;
                    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= 1.0 - y[i] * y[i];
                    t.accumulate(ix, gx);
                  });
}

Var glu(Var x) {
  Tape& t = *x.tape();
  const int ix = x.id();
  return t.record(ops::glu(x.value()), [&t, ix](const Tensor& g, const Tensor&) {
    const Tensor& xv = t.value(ix);
    const int d = xv.cols() / 2;
    Tensor gx = Tensor::zeros(xv.shape());
    for (int i = 0; i < xv.rows(); ++i) {
      for (int j = 0; j < d; ++j) {
        const double s = ops::sigmoid(xv(i, j + d));
        gx(i, j) = g(i, j) * s;
        gx(i, j + d) = g(i, j) * xv(i, j) * s * (1.0 - s);
      }
    }
    t.accumulate(ix, gx);
  });
}

namespace {

// dx = y * (g - rowsum(g * y)); masked entries have y == 0 and stay 0.
Tensor softmax_backward(const Tensor& g, const Tensor& y) {
  Tensor gx = Tensor::zeros(y.shape());
  for (int i = 0; i < y.rows(); ++i) {
    double dot = 0.0;
    for (int j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
    for (int j = 0; j < y.cols(); ++j) gx(i, j) = y(i, j) * (g(i, j) - dot);
  }
  return gx;
}

}  // namespace

Var masked_softmax(Var logits, const BoolMatrix& mask) {
  Tape& t = *logits.tape();
  const int ix = logits.id();
  return t.record(ops::masked_softmax(logits.value(), mask),
                  [&t, ix](const Tensor& g, const Tensor& y) {
                    t.accumulate(ix, softmax_backward(g, y));
                  });
}

Var softmax_rows(Var logits) {
  Tape& t = *logits.tape();
  const int ix = logits.id();
  return t.record(ops::softmax(logits.value()), [&t, ix](const Tensor& g, const Tensor& y) {
    t.accumulate(ix, softmax_backward(g, y));
  });
}

Var log_softmax(Var logits) {
  Tape& t = *logits.tape();
  const int ix = logits.id();
  return t.record(ops::log_softmax(logits.value()), [&t, ix](const Tensor& g, const Tensor& y) {
    Tensor gx = Tensor::zeros(y.shape());
    for (int i = 0; i < y.rows(); ++i) {
      double total = 0.0;
      for (int j = 0; j < y.cols(); ++j) total += g(i, j);
      for (int j = 0; j < y.cols(); ++j) gx(i, j) = g(i, j) - std::exp(y(i, j)) * total;
    }
    t.accumulate(ix, gx);
  });
}

namespace {

// Backward of (x - mean) * inv_std along the rows of a [n x m] matrix, where
// each row has its own statistics. dn is the gradient w.r.t. the normalised
// values.
Tensor normalize_rows_backward(const Tensor& dn, const Tensor& normalized, const Tensor& inv_std) {
  const int n = normalized.rows(), m = normalized.cols();
  Tensor dx({n, m});
  for (int i = 0; i < n; ++i) {
    double mean_dn = 0.0, mean_dn_n = 0.0;
    for (int j = 0; j < m; ++j) {
      mean_dn += dn(i, j);
      mean_dn_n += dn(i, j) * normalized(i, j);
    }
    mean_dn /= m;
    mean_dn_n /= m;
    const double inv = inv_std[static_cast<std::size_t>(i)];
    for (int j = 0; j < m; ++j) dx(i, j) = inv * (dn(i, j) - mean_dn - normalized(i, j) * mean_dn_n);
  }
  return dx;
}

}  // namespace

Var layer_norm(Var x, Var gain, Var bias) {
  Tape& t = tape_of(x, gain);
  auto r = ops::layer_norm_ex(x.value(), gain.value(), bias.value());
  const int ix = x.id(), ig = gain.id(), ib = bias.id();
  return t.record(std::move(r.out), [&t, ix, ig, ib, normalized = std::move(r.normalized),
                                     inv_std = std::move(r.inv_std)](const Tensor& g,
                                                                     const Tensor&) {
    const Tensor& gv = t.value(ig);
    const int rows = g.rows(), cols = g.cols();
    Tensor dn({rows, cols});
    Tensor dgain = Tensor::zeros(gv.shape());
    Tensor dbias = Tensor::zeros(gv.shape());
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        dn(i, j) = g(i, j) * gv[jj];
        dgain[jj] += g(i, j) * normalized(i, j);
        dbias[jj] += g(i, j);
      }
    }
    t.accumulate(ix, normalize_rows_backward(dn, normalized, inv_std));
    t.accumulate(ig, dgain);
    t.accumulate(ib, dbias);
  });
}

Var batch_norm_1d(Var x, Var gain, Var bias, BatchNormState& state, bool training) {
  Tape& t = tape_of(x, gain);
  auto r = ops::batch_norm_1d_ex(x.value(), state, gain.value(), bias.value(), training);
  if (training) state = r.state;
  const int ix = x.id(), ig = gain.id(), ib = bias.id();
  return t.record(std::move(r.out), [&t, ix, ig, ib, training,
                                     normalized = std::move(r.normalized),
                                     inv_std = std::move(r.inv_std)](const Tensor& g,
                                                                     const Tensor&) {
    const Tensor& gv = t.value(ig);
    const int channels = g.rows(), steps = g.cols();
    Tensor dn({channels, steps});
    Tensor dgain = Tensor::zeros(gv.shape());
    Tensor dbias = Tensor::zeros(gv.shape());
    for (int c = 0; c < channels; ++c) {
      const auto cc = static_cast<std::size_t>(c);
      for (int j = 0; j < steps; ++j) {
        dn(c, j) = g(c, j) * gv[cc];
        dgain[cc] += g(c, j) * normalized(c, j);
        dbias[cc] += g(c, j);
      }
    }
    if (training) {
      t.accumulate(ix, normalize_rows_backward(dn, normalized, inv_std));
    } else {
      Tensor dx = dn;
      for (int c = 0; c < channels; ++c)
        for (int j = 0; j < steps; ++j) dx(c, j) *= inv_std[static_cast<std::size_t>(c)];
      t.accumulate(ix, dx);
    }
    t.accumulate(ig, dgain);
    t.accumulate(ib, dbias);
  });
}

Var depthwise_conv1d(Var x, Var kernel, Var bias, bool causal) {
  Tape& t = tape_of(x, kernel);
  Tensor y = ops::depthwise_conv1d(x.value(), kernel.value(), bias.value(), causal);
  const int ix = x.id(), ik = kernel.id(), ib = bias.id();
  return t.record(std::move(y), [&t, ix, ik, ib, causal](const Tensor& g, const Tensor&) {
    const Tensor& xv = t.value(ix);
    const Tensor& kv = t.value(ik);
    const int steps = xv.rows(), channels = xv.cols(), k = kv.rows();
    const int offset = causal ? k - 1 : (k - 1) / 2;
    Tensor dx = Tensor::zeros(xv.shape());
    Tensor dk = Tensor::zeros(kv.shape());
    Tensor db = Tensor::zeros(t.value(ib).shape());
    for (int i = 0; i < steps; ++i) {
      for (int c = 0; c < channels; ++c) {
        const double gi = g(i, c);
        db[static_cast<std::size_t>(c)] += gi;
        for (int j = 0; j < k; ++j) {
          const int src = i + j - offset;
          if (src < 0 || src >= steps) continue;
          dx(src, c) += kv(j, c) * gi;
          dk(j, c) += xv(src, c) * gi;
        }
      }
    }
    t.accumulate(ix, dx);
    t.accumulate(ik, dk);
    t.accumulate(ib, db);
  });
}

Var conv2d_stride2(Var x, Var w, Var bias, bool causal) {
  Tape& t = tape_of(x, w);
  Tensor y = ops::conv2d_stride2(x.value(), w.value(), bias.value(), causal);
  const int ix = x.id(), iw = w.id(), ib = bias.id();
  return t.record(std::move(y), [&t, ix, iw, ib, causal](const Tensor& g, const Tensor&) {
    const Tensor& xv = t.value(ix);
    const Tensor& wv = t.value(iw);
    const int cin = xv.dim(0), time = xv.dim(1), freq = xv.dim(2), cout = wv.dim(0);
    const auto geo = ops::conv2d_stride2_geometry(time, freq, causal);
    Tensor dx = Tensor::zeros(xv.shape());
    Tensor dw = Tensor::zeros(wv.shape());
    Tensor db = Tensor::zeros(t.value(ib).shape());
    auto xd = xv.data();
    auto wd = wv.data();
    auto gd = g.data();
    auto dxd = dx.data();
    auto dwd = dw.data();
    for (int o = 0; o < cout; ++o) {
      for (int ti = 0; ti < geo.out_time; ++ti) {
        for (int fi = 0; fi < geo.out_freq; ++fi) {
          const double go = gd[static_cast<std::size_t>((o * geo.out_time + ti) * geo.out_freq + fi)];
          db[static_cast<std::size_t>(o)] += go;
          for (int ci = 0; ci < cin; ++ci) {
            for (int kt = 0; kt < 3; ++kt) {
              const int st = 2 * ti + kt - geo.pad_time_left;
              if (st < 0 || st >= time) continue;
              for (int kf = 0; kf < 3; ++kf) {
                const int sf = 2 * fi + kf - 1;
                if (sf < 0 || sf >= freq) continue;
                const auto wi = static_cast<std::size_t>(((o * cin + ci) * 3 + kt) * 3 + kf);
                const auto xi = static_cast<std::size_t>((ci * time + st) * freq + sf);
                dxd[xi] += wd[wi] * go;
                dwd[wi] += xd[xi] * go;
              }
            }
          }
        }
      }
    }
    t.accumulate(ix, dx);
    t.accumulate(iw, dw);
    t.accumulate(ib, db);
  });
}

Var reshape(Var x, std::vector<int> shape) {
  Tape& t = *x.tape();
  const int ix = x.id();
  return t.record(x.value().reshaped(std::move(shape)), [&t, ix](const Tensor& g, const Tensor&) {
    t.accumulate(ix, g.reshaped(t.value(ix).shape()));
  });
}

Var flatten_time_major(Var x) {
  Tape& t = *x.tape();
  const Tensor& xv = x.value();
  if (xv.rank() != 3) fail(ErrorKind::kDimension, "flatten_time_major: expected rank 3");
  const int c = xv.dim(0), time = xv.dim(1), freq = xv.dim(2);
  Tensor y({time, c * freq});
  auto xd = xv.data();
  for (int ch = 0; ch < c; ++ch)
    for (int ti = 0; ti < time; ++ti)
      for (int f = 0; f < freq; ++f)
        y(ti, ch * freq + f) = xd[static_cast<std::size_t>((ch * time + ti) * freq + f)];
  const int ix = x.id();
  return t.record(std::move(y), [&t, ix, c, time, freq](const Tensor& g, const Tensor&) {
    Tensor gx({c, time, freq});
    auto gd = gx.data();
    for (int ch = 0; ch < c; ++ch)
      for (int ti = 0; ti < time; ++ti)
        for (int f = 0; f < freq; ++f)
          gd[static_cast<std::size_t>((ch * time + ti) * freq + f)] = g(ti, ch * freq + f);
    t.accumulate(ix, gx);
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) fail(ErrorKind::kDimension, "concat_rows: nothing to concatenate");
  Tape& t = *parts.front().tape();
  const int cols = parts.front().value().cols();
  int rows = 0;
  for (const Var& p : parts) {
    if (p.tape() != &t) fail(ErrorKind::kDimension, "concat_rows: operands on different tapes");
    if (p.value().cols() != cols) {
      fail(ErrorKind::kDimension, "concat_rows: width " + std::to_string(p.value().cols()) +
                                      " vs " + std::to_string(cols));
    }
    rows += p.value().rows();
  }
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  std::vector<int> ids, counts;
  for (const Var& p : parts) {
    const auto v = p.value().data();
    data.insert(data.end(), v.begin(), v.end());
    ids.push_back(p.id());
    counts.push_back(p.value().rows());
  }
  return t.record(Tensor({rows, cols}, std::move(data)),
                  [&t, ids, counts, cols](const Tensor& g, const Tensor&) {
                    int start = 0;
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      const auto begin = g.data().begin() + static_cast<std::ptrdiff_t>(start) * cols;
                      std::vector<double> part(begin,
                                               begin + static_cast<std::ptrdiff_t>(counts[k]) * cols);
                      t.accumulate(ids[k], Tensor({counts[k], cols}, std::move(part)));
                      start += counts[k];
                    }
                  });
}

Var slice_rows(Var x, int start, int count) {
  Tape& t = *x.tape();
  const Tensor& xv = x.value();
  if (start < 0 || count < 0 || start + count > xv.rows()) {
    fail(ErrorKind::kDimension, "slice_rows: [" + std::to_string(start) + ", +" +
                                    std::to_string(count) + ") outside " + xv.shape_string());
  }
  const int cols = xv.cols();
  const auto begin = xv.data().begin() + static_cast<std::ptrdiff_t>(start) * cols;
  Tensor y({count, cols}, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(count) * cols));
  const int ix = x.id();
  return t.record(std::move(y), [&t, ix, start, count](const Tensor& g, const Tensor&) {
    Tensor gx = Tensor::zeros(t.value(ix).shape());
    for (int i = 0; i < count; ++i)
      for (int j = 0; j < g.cols(); ++j) gx(start + i, j) = g(i, j);
    t.accumulate(ix, gx);
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) fail(ErrorKind::kDimension, "concat_cols: nothing to concatenate");
  Tape& t = *parts.front().tape();
  const int rows = parts.front().value().rows();
  int cols = 0;
  std::vector<int> ids, widths;
  for (const Var& p : parts) {
    if (p.value().rows() != rows) fail(ErrorKind::kDimension, "concat_cols: row count mismatch");
    cols += p.value().cols();
    ids.push_back(p.id());
    widths.push_back(p.value().cols());
  }
  Tensor y({rows, cols});
  int off = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < v.cols(); ++j) y(i, off + j) = v(i, j);
    off += v.cols();
  }
  return t.record(std::move(y), [&t, ids, widths, rows](const Tensor& g, const Tensor&) {
    int off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      Tensor part({rows, widths[k]});
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < widths[k]; ++j) part(i, j) = g(i, off + j);
      t.accumulate(ids[k], part);
      off += widths[k];
    }
  });
}

Var slice_cols(Var x, int start, int count) {
  Tape& t = *x.tape();
  const Tensor& xv = x.value();
  if (start < 0 || count < 0 || start + count > xv.cols()) {
    fail(ErrorKind::kDimension, "slice_cols: range outside " + xv.shape_string());
  }
  Tensor y({xv.rows(), count});
  for (int i = 0; i < xv.rows(); ++i)
    for (int j = 0; j < count; ++j) y(i, j) = xv(i, start + j);
  const int ix = x.id();
  return t.record(std::move(y), [&t, ix, start, count](const Tensor& g, const Tensor&) {
    Tensor gx = Tensor::zeros(t.value(ix).shape());
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < count; ++j) gx(i, start + j) = g(i, j);
    t.accumulate(ix, gx);
  });
}

Var gather_rows(Var table, std::span<const int> ids) {
  Tape& t = *table.tape();
  const Tensor& tv = table.value();
  const int n = static_cast<int>(ids.size()), cols = tv.cols();
  Tensor y({n, cols});
  for (int i = 0; i < n; ++i) {
    const int id = ids[static_cast<std::size_t>(i)];
    if (id < 0 || id >= tv.rows()) {
      fail(ErrorKind::kVocab, "token id " + std::to_string(id) + " outside table of " +
                                  std::to_string(tv.rows()) + " rows");
    }
    for (int j = 0; j < cols; ++j) y(i, j) = tv(id, j);
  }
  const int it = table.id();
  std::vector<int> rows(ids.begin(), ids.end());
  return t.record(std::move(y), [&t, it, rows](const Tensor& g, const Tensor&) {
    Tensor gt = Tensor::zeros(t.value(it).shape());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (int j = 0; j < g.cols(); ++j) gt(rows[i], j) += g(static_cast<int>(i), j);
    t.accumulate(it, gt);
  });
}

Var pair_add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.cols()) fail(ErrorKind::kDimension, "pair_add: width mismatch");
  const int ta = av.rows(), ub = bv.rows(), cols = av.cols();
  Tensor y({ta * ub, cols});
  for (int i = 0; i < ta; ++i)
    for (int u = 0; u < ub; ++u)
      for (int j = 0; j < cols; ++j) y(i * ub + u, j) = av(i, j) + bv(u, j);
  const int ia = a.id(), ib = b.id();
  return t.record(std::move(y), [&t, ia, ib, ta, ub, cols](const Tensor& g, const Tensor&) {
    Tensor ga({ta, cols}), gb({ub, cols});
    for (int i = 0; i < ta; ++i)
      for (int u = 0; u < ub; ++u)
        for (int j = 0; j < cols; ++j) {
          ga(i, j) += g(i * ub + u, j);
          gb(u, j) += g(i * ub + u, j);
        }
    t.accumulate(ia, ga);
    t.accumulate(ib, gb);
  });
}

Var sum(Var x) {
  Tape& t = *x.tape();
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const int ix = x.id();
  return t.record(Tensor::scalar(s), [&t, ix](const Tensor& g, const Tensor&) {
    t.accumulate(ix, Tensor::full(t.value(ix).shape(), g[0]));
  });
}

Var stop_gradient(Var x) {
  return x.tape()->record(x.value(), nullptr);
}

}  // namespace cuctx

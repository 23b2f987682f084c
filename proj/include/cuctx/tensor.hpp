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

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace cuctx {

// Dense row-major array of doubles. Rank 1 to 3 in practice.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, double value);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor scalar(double value) { return Tensor({1}, {value}); }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // 2-D conveniences; rows()/cols() require rank 2.
  int rows() const;
  int cols() const;

  double& operator()(int r, int c) {
    return data_[static_cast<std::size_t>(r) * static_cast<std::size_t>(shape_[1]) +
                 static_cast<std::size_t>(c)];
  }
  double operator()(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * static_cast<std::size_t>(shape_[1]) +
                 static_cast<std::size_t>(c)];
  }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  std::span<double> row(int r);
  std::span<const double> row(int r) const;

  Tensor reshaped(std::vector<int> shape) const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  std::string shape_string() const;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

bool bitwise_equal(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);

// Boolean visibility matrix [queries x keys]; true = may attend.
class BoolMatrix {
 public:
  BoolMatrix() = default;
  BoolMatrix(int rows, int cols, bool value = false)
      : rows_(rows), cols_(cols),
        bits_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), value ? 1 : 0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool operator()(int r, int c) const {
    return bits_[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) +
                 static_cast<std::size_t>(c)] != 0;
  }
  void set(int r, int c, bool v) {
    bits_[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) +
          static_cast<std::size_t>(c)] = v ? 1 : 0;
  }
  int row_count(int r) const;
  bool operator==(const BoolMatrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct BatchNormState {
  Tensor running_mean;  // [C]
  Tensor running_var;   // [C]

  static BatchNormState identity(int channels);
};

inline constexpr double kNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

namespace ops {

Tensor matmul(const Tensor& a, const Tensor& b);
// a * b^T without materialising the transpose.
Tensor matmul_bt(const Tensor& a, const Tensor& b);
// a^T * b
Tensor matmul_at(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor masked_softmax(const Tensor& logits, const BoolMatrix& mask);
Tensor softmax(const Tensor& logits);
Tensor log_softmax(const Tensor& logits);

struct LayerNormResult {
  Tensor out;
  Tensor normalized;  // pre-affine
  Tensor inv_std;     // [t]
};
LayerNormResult layer_norm_ex(const Tensor& x, const Tensor& gain, const Tensor& bias);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias);

struct BatchNormResult {
  Tensor out;
  Tensor normalized;  // pre-affine
  Tensor inv_std;     // [C]
  BatchNormState state;  // updated running statistics (unchanged in eval)
};
// x is channels-first [C x t]: every channel is normalised over the t axis.
BatchNormResult batch_norm_1d_ex(const Tensor& x, const BatchNormState& state,
                                 const Tensor& gain, const Tensor& bias, bool training);
Tensor batch_norm_1d(const Tensor& x, const BatchNormState& state, bool training,
                     BatchNormState* updated = nullptr);

// x [t x c_in], w [c_in x c_out] -> [t x c_out]
Tensor pointwise_conv1d(const Tensor& x, const Tensor& w, const Tensor& bias);
// x [t x c], kernel [k x c]; symmetric padding (k odd) or left-only when causal.
Tensor depthwise_conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias,
                        bool causal);

struct Conv2dGeometry {
  int out_time;
  int out_freq;
  int pad_time_left;
};
Conv2dGeometry conv2d_stride2_geometry(int time, int freq, bool causal);
// x [c_in x T x F], w [c_out x c_in x 3 x 3] -> [c_out x ceil(T/2) x ceil(F/2)]
Tensor conv2d_stride2(const Tensor& x, const Tensor& w, const Tensor& bias, bool causal);

double sigmoid(double x);
Tensor relu(const Tensor& x);
Tensor swish(const Tensor& x);
Tensor glu(const Tensor& x);

}  // namespace ops
}  // namespace cuctx

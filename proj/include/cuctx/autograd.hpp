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

#include <functional>
#include <span>
#include <vector>

#include "cuctx/params.hpp"
#include "cuctx/tensor.hpp"

namespace cuctx {

class Tape;

// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  const Tensor& value() const;
  // Zero tensor of the value's shape when no gradient reached this node.
  Tensor grad() const;
  bool has_grad() const;

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Reverse-mode tape. Each recorded node keeps its forward value and a closure
// that pushes the node's output gradient into its inputs. Backward visits
// nodes in reverse creation order and skips nodes no gradient reached, so a
// subgraph cut off by stop_gradient is never touched.
class Tape {
 public:
  using Backward = std::function<void(const Tensor& grad_out, const Tensor& out_value)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  // Leaf that collects gradient but has no upstream.
  Var leaf(Tensor value);
  // Leaf whose gradient is added into the parameter's accumulator.
  Var param(Parameter& p);
  Var record(Tensor value, Backward backward);

  void accumulate(int id, const Tensor& g);
  void backward(Var root);

  const Tensor& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool has_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].has_grad; }
  const Tensor& grad_ref(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
  bool grad_enabled_;
};

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
// x [t x d] + bias broadcast over rows; bias has d elements.
Var add_row_bias(Var x, Var bias);
Var matmul(Var a, Var b);
Var matmul_bt(Var a, Var b);
Var transpose(Var a);
// x * w + bias
Var linear(Var x, Var w, Var bias);

Var relu(Var x);
Var swish(Var x);
Var sigmoid(Var x);
Var tanh(Var x);
Var glu(Var x);

Var masked_softmax(Var logits, const BoolMatrix& mask);
Var softmax_rows(Var logits);
Var log_softmax(Var logits);
Var layer_norm(Var x, Var gain, Var bias);
// Channels-first batch norm. In training mode the running statistics in
// `state` are replaced by their momentum update.
Var batch_norm_1d(Var x, Var gain, Var bias, BatchNormState& state, bool training);
Var depthwise_conv1d(Var x, Var kernel, Var bias, bool causal);
Var conv2d_stride2(Var x, Var w, Var bias, bool causal);
Var reshape(Var x, std::vector<int> shape);
// [C x T x F] -> [T x C*F]
Var flatten_time_major(Var x);

Var concat_rows(std::span<const Var> parts);
Var slice_rows(Var x, int start, int count);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var x, int start, int count);
Var gather_rows(Var table, std::span<const int> ids);
// a [T x J], b [U x J] -> [(T*U) x J] with row t*U + u = a_t + b_u.
Var pair_add(Var a, Var b);
Var sum(Var x);
// Forward identity; gradient is never propagated to the input.
Var stop_gradient(Var x);

}  // namespace cuctx

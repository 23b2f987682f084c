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

#include "cuctx/transducer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cuctx/error.hpp"

namespace cuctx {

namespace {

double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

}  // namespace

Predictor::Predictor(const ModelConfig& config, ParameterStore& store, Rng& rng)
    : vocab_size_(config.output_size()), hidden_(config.predictor_hidden) {
  const int e = config.predictor_embed, h = config.predictor_hidden;
  embedding_ = &store.add("pred.embedding", glorot(rng, {vocab_size_, e}, vocab_size_, e));
  input_ = {&store.add("pred.lstm.wx", glorot(rng, {e, 4 * h}, e, 4 * h)),
            &store.add("pred.lstm.b", Tensor::zeros({4 * h}))};
  recurrent_ = &store.add("pred.lstm.wh", glorot(rng, {h, 4 * h}, h, 4 * h));
}

void Predictor::check_token(int token) const {
  if (token < 0 || token >= vocab_size_) {
    fail(ErrorKind::kVocab, "token " + std::to_string(token) + " outside vocabulary of " +
                                std::to_string(vocab_size_) + " (incl. blank)");
  }
}

Predictor::CellOut Predictor::cell(Tape& tape, int token, Var hidden, Var cell) const {
  const int ids[] = {token};
  Var x = gather_rows(tape.param(*embedding_), ids);
  Var gates = add(linear(x, tape.param(*input_.w), tape.param(*input_.b)),
                  matmul(hidden, tape.param(*recurrent_)));
  Var in_gate = sigmoid(slice_cols(gates, 0, hidden_));
  Var forget_gate = sigmoid(slice_cols(gates, hidden_, hidden_));
  Var candidate = tanh(slice_cols(gates, 2 * hidden_, hidden_));
  Var out_gate = sigmoid(slice_cols(gates, 3 * hidden_, hidden_));
  Var c = add(mul(forget_gate, cell), mul(in_gate, candidate));
  return {mul(out_gate, tanh(c)), c};
}

Var Predictor::forward(Tape& tape, std::span<const int> labels) const {
  for (int y : labels) check_token(y);
  Var h = tape.leaf(Tensor::zeros({1, hidden_}));
  Var c = tape.leaf(Tensor::zeros({1, hidden_}));
  std::vector<Var> outputs;
  outputs.reserve(labels.size() + 1);
  auto out = cell(tape, kBlank, h, c);
  outputs.push_back(out.hidden);
  for (int y : labels) {
    out = cell(tape, y, out.hidden, out.cell);
    outputs.push_back(out.hidden);
  }
  return concat_rows(outputs);
}

Predictor::State Predictor::initial() const {
  Tape tape(false);
  auto out = cell(tape, kBlank, tape.leaf(Tensor::zeros({1, hidden_})),
                  tape.leaf(Tensor::zeros({1, hidden_})));
  return {out.hidden.value(), out.cell.value(), out.hidden.value()};
}

Predictor::State Predictor::step(const State& state, int token) const {
  check_token(token);
  Tape tape(false);
  auto out = cell(tape, token, tape.leaf(state.hidden), tape.leaf(state.cell));
  return {out.hidden.value(), out.cell.value(), out.hidden.value()};
}

JointNetwork::JointNetwork(const ModelConfig& config, ParameterStore& store, Rng& rng) {
  const int d = config.d_model, h = config.predictor_hidden, j = config.joint_dim;
  const int v = config.output_size();
  enc_proj_ = &store.add("joint.enc.w", glorot(rng, {d, j}, d, j));
  pred_proj_ = {&store.add("joint.pred.w", glorot(rng, {h, j}, h, j)),
                &store.add("joint.pred.b", Tensor::zeros({j}))};
  out_ = {&store.add("joint.out.w", glorot(rng, {j, v}, j, v)),
          &store.add("joint.out.b", Tensor::zeros({v}))};
}

Var JointNetwork::forward(Var enc, Var pred) const {
  Tape& tape = *enc.tape();
  Var e = matmul(enc, tape.param(*enc_proj_));
  Var p = linear(pred, tape.param(*pred_proj_.w), tape.param(*pred_proj_.b));
  Var hidden = tanh(pair_add(e, p));
  return log_softmax(linear(hidden, tape.param(*out_.w), tape.param(*out_.b)));
}

Tensor JointNetwork::log_probs(const Tensor& enc_row, const Tensor& pred_row) const {
  Tape tape(false);
  return forward(tape.leaf(enc_row), tape.leaf(pred_row)).value();
}

TransducerLattice transducer_lattice(const Tensor& log_probs, std::span<const int> labels,
                                     int frames) {
  const int u1 = static_cast<int>(labels.size()) + 1;
  if (frames < 1) fail(ErrorKind::kLength, "transducer loss needs at least one encoder frame");
  if (log_probs.rank() != 2 || log_probs.rows() != frames * u1) {
    fail(ErrorKind::kDimension, "log_probs " + log_probs.shape_string() + " do not cover a " +
                                    std::to_string(frames) + "x" + std::to_string(u1) +
                                    " lattice");
  }
  for (int y : labels) {
    if (y <= kBlank || y >= log_probs.cols()) {
      fail(ErrorKind::kVocab, "label " + std::to_string(y) + " is blank or out of range");
    }
  }
  const double neg_inf = -std::numeric_limits<double>::infinity();
  auto blank = [&](int t, int u) { return log_probs(t * u1 + u, kBlank); };
  auto emit = [&](int t, int u) { return log_probs(t * u1 + u, labels[static_cast<std::size_t>(u)]); };

  TransducerLattice lat{0.0, Tensor::full({frames, u1}, neg_inf), Tensor::full({frames, u1}, neg_inf)};
  lat.alpha(0, 0) = 0.0;
  for (int t = 0; t < frames; ++t) {
    for (int u = 0; u < u1; ++u) {
      if (t == 0 && u == 0) continue;
      double a = neg_inf;
      if (t > 0) a = lat.alpha(t - 1, u) + blank(t - 1, u);
      if (u > 0) a = log_add(a, lat.alpha(t, u - 1) + emit(t, u - 1));
      lat.alpha(t, u) = a;
    }
  }
  for (int t = frames - 1; t >= 0; --t) {
    for (int u = u1 - 1; u >= 0; --u) {
      if (t == frames - 1 && u == u1 - 1) {
        lat.beta(t, u) = blank(t, u);
        continue;
      }
      double b = neg_inf;
      if (t + 1 < frames) b = lat.beta(t + 1, u) + blank(t, u);
      if (u + 1 < u1) b = log_add(b, lat.beta(t, u + 1) + emit(t, u));
      lat.beta(t, u) = b;
    }
  }
  lat.loss = -(lat.alpha(frames - 1, u1 - 1) + blank(frames - 1, u1 - 1));
  if (!std::isfinite(lat.loss)) fail(ErrorKind::kNumeric, "transducer loss is not finite");
  return lat;
}

Var transducer_loss(Var log_probs, std::span<const int> labels, int frames) {
  Tape& tape = *log_probs.tape();
  auto lat = transducer_lattice(log_probs.value(), labels, frames);
  const int ix = log_probs.id();
  std::vector<int> ys(labels.begin(), labels.end());
  return tape.record(
      Tensor::scalar(lat.loss),
      [&tape, ix, ys, frames, alpha = std::move(lat.alpha), beta = std::move(lat.beta),
       loss = lat.loss](const Tensor& g, const Tensor&) {
        const Tensor& lp = tape.value(ix);
        const int u1 = static_cast<int>(ys.size()) + 1;
        Tensor grad = Tensor::zeros(lp.shape());
        // log P(Y|X) = -loss; every arc's posterior is exp(alpha + arc + beta_next + loss).
        for (int t = 0; t < frames; ++t) {
          for (int u = 0; u < u1; ++u) {
            const int row = t * u1 + u;
            const double next_blank =
                t + 1 < frames ? beta(t + 1, u) : (u == u1 - 1 ? 0.0 : -INFINITY);
            grad(row, kBlank) = -std::exp(alpha(t, u) + lp(row, kBlank) + next_blank + loss) * g[0];
            if (u + 1 < u1) {
              const int y = ys[static_cast<std::size_t>(u)];
              grad(row, y) = -std::exp(alpha(t, u) + lp(row, y) + beta(t, u + 1) + loss) * g[0];
            }
          }
        }
        tape.accumulate(ix, grad);
      });
}

std::vector<int> greedy_decode(const Predictor& predictor, const JointNetwork& joint,
                               const Tensor& encoder_out) {
  std::vector<int> hyp;
  auto state = predictor.initial();
  for (int t = 0; t < encoder_out.rows(); ++t) {
    const auto row = encoder_out.row(t);
    const Tensor enc_row({1, encoder_out.cols()}, std::vector<double>(row.begin(), row.end()));
    for (int emitted = 0; emitted < kMaxSymbolsPerFrame; ++emitted) {
      const Tensor lp = joint.log_probs(enc_row, state.output);
      const auto scores = lp.row(0);
      const int best =
          static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
      if (best == kBlank) break;
      hyp.push_back(best);
      state = predictor.step(state, best);
    }
  }
  return hyp;
}

int edit_distance(std::span<const int> hyp, std::span<const int> ref) {
  std::vector<int> prev(ref.size() + 1), cur(ref.size() + 1);
  for (std::size_t j = 0; j <= ref.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= hyp.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= ref.size(); ++j) {
      const int sub = prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[ref.size()];
}

double token_error_rate(std::span<const int> hyp, std::span<const int> ref) {
  return static_cast<double>(edit_distance(hyp, ref)) /
         static_cast<double>(std::max<std::size_t>(1, ref.size()));
}

}  // namespace cuctx

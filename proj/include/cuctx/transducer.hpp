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

#include <span>
#include <vector>

#include "cuctx/conformer.hpp"

namespace cuctx {

inline constexpr int kBlank = 0;
inline constexpr int kMaxSymbolsPerFrame = 10;

// Label-history encoder: token embedding followed by one unidirectional LSTM
// layer. Row u of its output (F_u) summarises labels y_1..y_u, with the blank
// id standing in as the start symbol.
class Predictor {
 public:
  struct State {
    Tensor hidden;  // [1 x H]
    Tensor cell;    // [1 x H]
    Tensor output;  // F for the history consumed so far, [1 x H]
  };

  Predictor(const ModelConfig& config, ParameterStore& store, Rng& rng);

  // [U+1 x H] for labels y_1..y_U.
  Var forward(Tape& tape, std::span<const int> labels) const;

  State initial() const;
  State step(const State& state, int token) const;

 private:
  struct CellOut {
    Var hidden;
    Var cell;
  };
  CellOut cell(Tape& tape, int token, Var hidden, Var cell) const;
  void check_token(int token) const;

  int vocab_size_;  // including blank
  int hidden_;
  Parameter* embedding_;
  LinearParams input_;
  Parameter* recurrent_;
};

// G_{t,u} = tanh(H_t W_enc + F_u W_pred + b), log P = log_softmax(G W_out + b_out).
class JointNetwork {
 public:
  JointNetwork(const ModelConfig& config, ParameterStore& store, Rng& rng);

  // enc [T x d], pred [U1 x H] -> [(T*U1) x (V+1)], row t*U1 + u.
  Var forward(Var enc, Var pred) const;
  // Log-probabilities for a single (H_t, F_u) pair, [1 x (V+1)].
  Tensor log_probs(const Tensor& enc_row, const Tensor& pred_row) const;

 private:
  Parameter* enc_proj_;
  LinearParams pred_proj_;
  LinearParams out_;
};

struct TransducerLattice {
  double loss = 0.0;  // -log P(Y | X)
  Tensor alpha;       // [T x U+1], log forward variables
  Tensor beta;        // [T x U+1], log backward variables
};

// Forward-backward over the T x (U+1) lattice. log_probs rows are indexed
// t*(U+1) + u.
TransducerLattice transducer_lattice(const Tensor& log_probs, std::span<const int> labels,
                                     int frames);
// Scalar -log P(Y|X) on the tape, with gradients from forward-backward.
Var transducer_loss(Var log_probs, std::span<const int> labels, int frames);

std::vector<int> greedy_decode(const Predictor& predictor, const JointNetwork& joint,
                               const Tensor& encoder_out);

int edit_distance(std::span<const int> hyp, std::span<const int> ref);
double token_error_rate(std::span<const int> hyp, std::span<const int> ref);

}  // namespace cuctx

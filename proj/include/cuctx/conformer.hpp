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
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cuctx/autograd.hpp"
#include "cuctx/config.hpp"
#include "cuctx/masks.hpp"

namespace cuctx {

using Rng = std::mt19937_64;

// Glorot-uniform matrix [fan_in x fan_out].
Tensor glorot(Rng& rng, std::vector<int> shape, int fan_in, int fan_out);

struct LinearParams {
  Parameter* w = nullptr;  // [in x out]
  Parameter* b = nullptr;  // [out]
};

struct LayerNormParams {
  Parameter* gain = nullptr;
  Parameter* bias = nullptr;
};

struct FeedForwardParams {
  LayerNormParams ln;
  LinearParams up;    // d -> ratio*d
  LinearParams down;  // ratio*d -> d
};

struct AttentionParams {
  LayerNormParams ln;
  LinearParams query, key, value, out;
};

struct ConvModuleParams {
  LayerNormParams ln;
  LinearParams pointwise_in;  // d -> 2d, followed by GLU
  Parameter* depthwise_kernel = nullptr;  // [k x d]
  Parameter* depthwise_bias = nullptr;
  LayerNormParams bn_affine;   // batch-norm gain/bias
  Parameter* bn_mean = nullptr;  // running statistics (buffers)
  Parameter* bn_var = nullptr;
  LinearParams pointwise_out;  // d -> d
};

struct ConformerBlockParams {
  FeedForwardParams ffn1;
  AttentionParams attn;
  ConvModuleParams conv;
  FeedForwardParams ffn2;
  LayerNormParams final_ln;
  int heads = 1;
};

struct SubsamplerParams {
  Parameter* conv1_w = nullptr;  // [C x 1 x 3 x 3]
  Parameter* conv1_b = nullptr;
  Parameter* conv2_w = nullptr;  // [C x C x 3 x 3]
  Parameter* conv2_b = nullptr;
  LinearParams out;              // C*ceil(ceil(D_in/2)/2) -> d_model
};

// Keys/values a block may attend to beyond the current utterance, plus the
// visibility of those rows for every current query.
struct LayerContext {
  std::optional<Var> memory;  // [K_prev x d]
  AttentionMask prev_mask;    // [T' x K_prev]
};

// Called once per block (1-based layer index) with the current query count.
using ContextProvider = std::function<LayerContext(Tape&, int layer, int num_queries)>;

struct EncoderOutput {
  std::vector<Var> layers;  // layers[0] = subsampler output, layers[l] = block l
  int subsampled_length = 0;

  Var final() const { return layers.back(); }
};

int subsampled_length(int frames);
Tensor sinusoidal_positions(int frames, int dim);

Var feed_forward(const FeedForwardParams& p, Var x);
// Multi-head attention; queries from `query_src`, keys/values from `kv_src`.
Var multi_head_attention(const AttentionParams& p, int heads, Var query_src, Var kv_src,
                         const AttentionMask& mask);
Var conv_module(const ConvModuleParams& p, Var x, bool causal, bool training);
// Independent sequences through one CONV module; batch-norm statistics are
// pooled over the frames of all of them.
std::vector<Var> conv_module_batch(const ConvModuleParams& p, std::span<const Var> xs, bool causal,
                                   bool training);

// One Conformer block: half-step FFN, MHSA over [memory | current], CONV,
// half-step FFN and final LayerNorm, each with its residual connection.
Var conformer_block(const ConformerBlockParams& p, Var h_prev, const AttentionMask& mask,
                    std::optional<Var> memory, bool causal, bool training);

struct BlockInput {
  Var h_prev;
  AttentionMask mask;
  std::optional<Var> memory;
};

std::vector<Var> conformer_block_batch(const ConformerBlockParams& p,
                                       std::span<const BlockInput> inputs, bool causal,
                                       bool training);

class ConformerEncoder {
 public:
  ConformerEncoder(const ModelConfig& config, ParameterStore& store, Rng& rng);

  Var subsample(Tape& tape, const Tensor& features, bool causal) const;
  EncoderOutput encode(Tape& tape, const Tensor& features, const MaskSpec& mask,
                       const ContextProvider* context, bool training) const;
  // Layer-synchronous encoding of independent sequences (shared batch-norm
  // statistics). `contexts` is empty or holds one entry per sequence.
  std::vector<EncoderOutput> encode_batch(Tape& tape, std::span<const Tensor> features,
                                          const MaskSpec& mask,
                                          std::span<const ContextProvider* const> contexts,
                                          bool training) const;

  const ModelConfig& config() const { return config_; }
  const std::vector<ConformerBlockParams>& blocks() const { return blocks_; }

 private:
  ModelConfig config_;
  SubsamplerParams subsampler_;
  std::vector<ConformerBlockParams> blocks_;
};

}  // namespace cuctx

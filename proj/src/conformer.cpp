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

#include "cuctx/conformer.hpp"

#include <cmath>

#include "cuctx/error.hpp"

namespace cuctx {

Tensor glorot(Rng& rng, std::vector<int> shape, int fan_in, int fan_out) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = dist(rng);
  return t;
}

namespace {

LinearParams make_linear(ParameterStore& store, Rng& rng, const std::string& name, int in,
                         int out) {
  return {&store.add(name + ".w", glorot(rng, {in, out}, in, out)),
          &store.add(name + ".b", Tensor::zeros({out}))};
}

LayerNormParams make_ln(ParameterStore& store, const std::string& name, int d) {
  return {&store.add(name + ".gain", Tensor::full({d}, 1.0)),
          &store.add(name + ".bias", Tensor::zeros({d}))};
}

FeedForwardParams make_ffn(ParameterStore& store, Rng& rng, const std::string& name, int d,
                           int ratio) {
  return {make_ln(store, name + ".ln", d), make_linear(store, rng, name + ".up", d, ratio * d),
          make_linear(store, rng, name + ".down", ratio * d, d)};
}

Var apply_linear(const LinearParams& p, Var x) {
  Tape& t = *x.tape();
  return linear(x, t.param(*p.w), t.param(*p.b));
}

Var apply_ln(const LayerNormParams& p, Var x) {
  Tape& t = *x.tape();
  return layer_norm(x, t.param(*p.gain), t.param(*p.bias));
}

}  // namespace

int subsampled_length(int frames) { return ((frames + 1) / 2 + 1) / 2; }

Tensor sinusoidal_positions(int frames, int dim) {
  Tensor pe({frames, dim});
  for (int t = 0; t < frames; ++t) {
    for (int i = 0; i < dim; i += 2) {
      const double angle = t / std::pow(10000.0, static_cast<double>(i) / dim);
      pe(t, i) = std::sin(angle);
      if (i + 1 < dim) pe(t, i + 1) = std::cos(angle);
    }
  }
  return pe;
}

Var feed_forward(const FeedForwardParams& p, Var x) {
  return apply_linear(p.down, swish(apply_linear(p.up, apply_ln(p.ln, x))));
}

Var multi_head_attention(const AttentionParams& p, int heads, Var query_src, Var kv_src,
                         const AttentionMask& mask) {
  const int queries = query_src.value().rows();
  const int keys = kv_src.value().rows();
  if (mask.num_queries() != queries || mask.num_keys() != keys) {
    fail(ErrorKind::kDimension, "attention mask is " + std::to_string(mask.num_queries()) + "x" +
                                    std::to_string(mask.num_keys()) + " but attention is " +
                                    std::to_string(queries) + "x" + std::to_string(keys));
  }
  const int d = query_src.value().cols();
  const int dh = d / heads;
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(dh));

  Var q = apply_linear(p.query, query_src);
  Var k = apply_linear(p.key, kv_src);
  Var v = apply_linear(p.value, kv_src);
  std::vector<Var> head_out;
  head_out.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Var qh = slice_cols(q, h * dh, dh);
    Var kh = slice_cols(k, h * dh, dh);
    Var vh = slice_cols(v, h * dh, dh);
    Var weights = masked_softmax(scale(matmul_bt(qh, kh), scale_factor), mask.allow);
    head_out.push_back(matmul(weights, vh));
  }
  return apply_linear(p.out, heads == 1 ? head_out.front() : concat_cols(head_out));
}

std::vector<Var> conv_module_batch(const ConvModuleParams& p, std::span<const Var> xs, bool causal,
                                   bool training) {
  if (xs.empty()) return {};
  Tape& t = *xs.front().tape();
  std::vector<Var> ys;
  ys.reserve(xs.size());
  for (const Var& x : xs) {
    Var y = glu(apply_linear(p.pointwise_in, apply_ln(p.ln, x)));
    ys.push_back(depthwise_conv1d(y, t.param(*p.depthwise_kernel), t.param(*p.depthwise_bias), causal));
  }
  // One set of batch statistics over the frames of every sequence.
  Var pooled = ys.size() == 1 ? ys.front() : concat_rows(ys);
  BatchNormState state{p.bn_mean->value, p.bn_var->value};
  Var normed = transpose(batch_norm_1d(transpose(pooled), t.param(*p.bn_affine.gain),
                                       t.param(*p.bn_affine.bias), state, training));
  if (training) {
    p.bn_mean->value = std::move(state.running_mean);
    p.bn_var->value = std::move(state.running_var);
  }
  std::vector<Var> out;
  out.reserve(xs.size());
  int start = 0;
  for (const Var& y : ys) {
    const int rows = y.value().rows();
    Var part = ys.size() == 1 ? normed : slice_rows(normed, start, rows);
    start += rows;
    out.push_back(apply_linear(p.pointwise_out, swish(part)));
  }
  return out;
}

Var conv_module(const ConvModuleParams& p, Var x, bool causal, bool training) {
  return conv_module_batch(p, std::span<const Var>(&x, 1), causal, training).front();
}

std::vector<Var> conformer_block_batch(const ConformerBlockParams& p,
                                       std::span<const BlockInput> inputs, bool causal,
                                       bool training) {
  std::vector<Var> x_mhsa;
  x_mhsa.reserve(inputs.size());
  for (const BlockInput& in : inputs) {
    const int frames = in.h_prev.value().rows();
    const int memory_rows = in.memory ? in.memory->value().rows() : 0;
    if (in.mask.num_queries() != frames || in.mask.num_keys() != memory_rows + frames) {
      fail(ErrorKind::kDimension, "block mask " + std::to_string(in.mask.num_queries()) + "x" +
                                      std::to_string(in.mask.num_keys()) + " does not match " +
                                      std::to_string(frames) + " frames with " +
                                      std::to_string(memory_rows) + " context rows");
    }
    if (in.memory && in.memory->value().cols() != in.h_prev.value().cols()) {
      fail(ErrorKind::kConfig, "context width " + std::to_string(in.memory->value().cols()) +
                                   " does not match model width " +
                                   std::to_string(in.h_prev.value().cols()));
    }

    Var x_ffn = add(in.h_prev, scale(feed_forward(p.ffn1, in.h_prev), 0.5));

    Var query_src = apply_ln(p.attn.ln, x_ffn);
    Var kv_src = query_src;
    if (in.memory) {
      const Var parts[] = {*in.memory, x_ffn};
      kv_src = apply_ln(p.attn.ln, concat_rows(parts));
    }
    x_mhsa.push_back(add(x_ffn, multi_head_attention(p.attn, p.heads, query_src, kv_src, in.mask)));
  }

  std::vector<Var> conv = conv_module_batch(p.conv, x_mhsa, causal, training);
  std::vector<Var> out;
  out.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Var x_conv = add(x_mhsa[i], conv[i]);
    out.push_back(apply_ln(p.final_ln, add(x_conv, scale(feed_forward(p.ffn2, x_conv), 0.5))));
  }
  return out;
}

Var conformer_block(const ConformerBlockParams& p, Var h_prev, const AttentionMask& mask,
                    std::optional<Var> memory, bool causal, bool training) {
  const BlockInput in{h_prev, mask, std::move(memory)};
  return conformer_block_batch(p, std::span<const BlockInput>(&in, 1), causal, training).front();
}

ConformerEncoder::ConformerEncoder(const ModelConfig& config, ParameterStore& store, Rng& rng)
    : config_(config) {
  config_.validate();
  const int d = config.d_model;
  const int c = config.subsample_channels;
  const int freq = ((config.input_dim + 1) / 2 + 1) / 2;
  subsampler_.conv1_w = &store.add("enc.sub.conv1.w", glorot(rng, {c, 1, 3, 3}, 9, 9 * c));
  subsampler_.conv1_b = &store.add("enc.sub.conv1.b", Tensor::zeros({c}));
  subsampler_.conv2_w = &store.add("enc.sub.conv2.w", glorot(rng, {c, c, 3, 3}, 9 * c, 9 * c));
  subsampler_.conv2_b = &store.add("enc.sub.conv2.b", Tensor::zeros({c}));
  subsampler_.out = make_linear(store, rng, "enc.sub.out", c * freq, d);

  for (int l = 1; l <= config.blocks; ++l) {
    const std::string name = "enc.block" + std::to_string(l);
    ConformerBlockParams b;
    b.heads = config.heads;
    b.ffn1 = make_ffn(store, rng, name + ".ffn1", d, config.ffn_ratio);
    b.attn.ln = make_ln(store, name + ".attn.ln", d);
    b.attn.query = make_linear(store, rng, name + ".attn.q", d, d);
    b.attn.key = make_linear(store, rng, name + ".attn.k", d, d);
    b.attn.value = make_linear(store, rng, name + ".attn.v", d, d);
    b.attn.out = make_linear(store, rng, name + ".attn.out", d, d);
    b.conv.ln = make_ln(store, name + ".conv.ln", d);
    b.conv.pointwise_in = make_linear(store, rng, name + ".conv.pw1", d, 2 * d);
    b.conv.depthwise_kernel = &store.add(
        name + ".conv.dw.kernel", glorot(rng, {config.conv_kernel, d}, config.conv_kernel, 1));
    b.conv.depthwise_bias = &store.add(name + ".conv.dw.bias", Tensor::zeros({d}));
    b.conv.bn_affine = make_ln(store, name + ".conv.bn", d);
    b.conv.bn_mean = &store.add(name + ".conv.bn.running_mean", Tensor::zeros({d}), false);
    b.conv.bn_var = &store.add(name + ".conv.bn.running_var", Tensor::full({d}, 1.0), false);
    b.conv.pointwise_out = make_linear(store, rng, name + ".conv.pw2", d, d);
    b.ffn2 = make_ffn(store, rng, name + ".ffn2", d, config.ffn_ratio);
    b.final_ln = make_ln(store, name + ".final_ln", d);
    blocks_.push_back(b);
  }
}

Var ConformerEncoder::subsample(Tape& tape, const Tensor& features, bool causal) const {
  if (features.rank() != 2 || features.cols() != config_.input_dim) {
    fail(ErrorKind::kDimension, "features " + features.shape_string() + " do not have " +
                                    std::to_string(config_.input_dim) + " channels");
  }
  const int frames = features.rows();
  if (frames < 4) {
    fail(ErrorKind::kLength, "utterance of " + std::to_string(frames) +
                                 " frames is shorter than the 4-frame subsampling minimum");
  }
  Var x = tape.leaf(features.reshaped({1, frames, config_.input_dim}));
  x = relu(conv2d_stride2(x, tape.param(*subsampler_.conv1_w), tape.param(*subsampler_.conv1_b),
                          causal));
  x = relu(conv2d_stride2(x, tape.param(*subsampler_.conv2_w), tape.param(*subsampler_.conv2_b),
                          causal));
  x = apply_linear(subsampler_.out, flatten_time_major(x));
  const int out_frames = x.value().rows();
  return add(x, tape.leaf(sinusoidal_positions(out_frames, config_.d_model)));
}

EncoderOutput ConformerEncoder::encode(Tape& tape, const Tensor& features, const MaskSpec& mask,
                                       const ContextProvider* context, bool training) const {
  return encode_batch(tape, std::span<const Tensor>(&features, 1), mask,
                      std::span<const ContextProvider* const>(&context, 1), training)
      .front();
}

std::vector<EncoderOutput> ConformerEncoder::encode_batch(
    Tape& tape, std::span<const Tensor> features, const MaskSpec& mask,
    std::span<const ContextProvider* const> contexts, bool training) const {
  if (!contexts.empty() && contexts.size() != features.size()) {
    fail(ErrorKind::kDimension, "one context provider per sequence expected");
  }
  const bool causal = mask.mode == MaskMode::kStreaming;
  std::vector<EncoderOutput> out(features.size());
  std::vector<AttentionMask> current;
  for (std::size_t i = 0; i < features.size(); ++i) {
    out[i].layers.push_back(subsample(tape, features[i], causal));
    out[i].subsampled_length = out[i].layers.front().value().rows();
    current.push_back(build_current_mask(mask, out[i].subsampled_length));
  }

  for (int l = 1; l <= static_cast<int>(blocks_.size()); ++l) {
    std::vector<BlockInput> inputs;
    inputs.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
      LayerContext ctx;
      if (!contexts.empty() && contexts[i]) ctx = (*contexts[i])(tape, l, out[i].subsampled_length);
      if (ctx.memory) {
        inputs.push_back({out[i].layers.back(), compose(ctx.prev_mask, current[i]), ctx.memory});
      } else {
        inputs.push_back({out[i].layers.back(), current[i], std::nullopt});
      }
    }
    auto h = conformer_block_batch(blocks_[static_cast<std::size_t>(l - 1)], inputs, causal, training);
    for (std::size_t i = 0; i < features.size(); ++i) out[i].layers.push_back(h[i]);
  }
  return out;
}

}  // namespace cuctx

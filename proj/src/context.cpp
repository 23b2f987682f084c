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

#include "cuctx/context.hpp"

#include <algorithm>
#include <numeric>

#include "cuctx/error.hpp"

namespace cuctx {

void ContextCache::update(const std::string& conversation, CachedUtterance entry) {
  auto& list = entries_[conversation];
  list.push_back(std::move(entry));
  const int m = std::max(capacity_.max_utterances, 0);
  while (static_cast<int>(list.size()) > m) list.erase(list.begin());
  if (capacity_.max_frames) {
    // Drop the oldest entry while the remaining ones still cover the budget.
    auto total = [&list] {
      int n = 0;
      for (const auto& e : list) n += e.frames();
      return n;
    };
    while (list.size() > 1 && total() - list.front().frames() >= *capacity_.max_frames) {
      list.erase(list.begin());
    }
  }
}

void ContextCache::reset(const std::string& conversation) { entries_.erase(conversation); }

std::span<const CachedUtterance> ContextCache::entries(const std::string& conversation) const {
  auto it = entries_.find(conversation);
  if (it == entries_.end()) return {};
  return it->second;
}

std::size_t ContextCache::size(const std::string& conversation) const {
  return entries(conversation).size();
}

PoolingResult pool_project(const PoolingProjector& proj, Var h_prev, bool training) {
  Tape& t = *h_prev.tape();
  Var h = stop_gradient(h_prev);
  Var scores = relu(matmul_bt(t.param(*proj.projection), h));  // [L x T]
  BatchNormState state{proj.bn_mean->value, proj.bn_var->value};
  Var normed = batch_norm_1d(scores, t.param(*proj.bn_affine.gain),
                             t.param(*proj.bn_affine.bias), state, training);
  if (training) {
    proj.bn_mean->value = std::move(state.running_mean);
    proj.bn_var->value = std::move(state.running_var);
  }
  Var weights = softmax_rows(normed);
  return {weights, matmul(weights, h)};
}

Tensor fuse_input_audio(const Tensor& current, std::span<const CachedUtterance> cache, int m) {
  const std::size_t take = std::min<std::size_t>(cache.size(), static_cast<std::size_t>(std::max(m, 0)));
  const int dim = current.cols();
  int rows = current.rows();
  for (std::size_t i = cache.size() - take; i < cache.size(); ++i) {
    if (cache[i].features.cols() != dim) {
      fail(ErrorKind::kDimension, "cached features have width " +
                                      std::to_string(cache[i].features.cols()) + ", expected " +
                                      std::to_string(dim));
    }
    rows += cache[i].features.rows();
  }
  Tensor out = Tensor::zeros({rows, dim});
  std::size_t pos = 0;
  auto append = [&](const Tensor& x) {
    std::copy(x.data().begin(), x.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(pos));
    pos += x.size();
  };
  for (std::size_t i = cache.size() - take; i < cache.size(); ++i) append(cache[i].features);
  append(current);
  return out;
}

namespace {

std::vector<Var> cut(std::span<const Var> prev) {
  std::vector<Var> out;
  out.reserve(prev.size());
  for (const Var& v : prev) out.push_back(stop_gradient(v));
  return out;
}

// Every current query sees every memory row.
AttentionMask full_prev_mask(std::span<const Var> parts, int num_queries) {
  MaskSpec spec;
  spec.mode = MaskMode::kNonStreaming;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    spec.prev_utterance_lengths.push_back(it->value().rows());
  }
  return build_prev_mask(spec, num_queries);
}

}  // namespace

LayerContext fuse_embedding_concat(std::span<const Var> prev, int num_queries) {
  if (prev.empty()) return {};
  std::vector<Var> parts = cut(prev);
  return {concat_rows(parts), full_prev_mask(parts, num_queries)};
}

LayerContext fuse_pooled(const PoolingProjector& proj, std::span<const Var> prev,
                         int num_queries, bool training) {
  if (prev.empty()) return {};
  std::vector<Var> pooled;
  for (const Var& h : prev) pooled.push_back(pool_project(proj, h, training).pooled);
  return {concat_rows(pooled), full_prev_mask(pooled, num_queries)};
}

LayerContext fuse_chunked(std::span<const Var> prev, const MaskSpec& spec, int num_queries) {
  if (prev.empty()) return {};
  std::vector<Var> parts = cut(prev);
  MaskSpec s = spec;
  s.prev_utterance_lengths.clear();
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    s.prev_utterance_lengths.push_back(it->value().rows());
  }
  return {concat_rows(parts), build_prev_mask(s, num_queries)};
}

ContextFusion::ContextFusion(const ModelConfig& model, const FusionConfig& fusion,
                             ParameterStore& store, Rng& rng)
    : model_(model), config_(fusion) {
  if (config_.method == FusionMethod::kPooling) {
    const int l = config_.pooling_rows;
    const int d = model_.d_model;
    if (l < 1) fail(ErrorKind::kConfig, "pooling_rows must be >= 1");
    for (int b = 0; b < model_.blocks; ++b) {
      const std::string name = "ctx.pool" + std::to_string(b + 1);
      PoolingProjector p;
      p.projection = &store.add(name + ".proj", glorot(rng, {l, d}, d, l));
      p.bn_affine = {&store.add(name + ".bn.gain", Tensor::full({l}, 1.0)),
                     &store.add(name + ".bn.bias", Tensor::zeros({l}))};
      p.bn_mean = &store.add(name + ".bn.running_mean", Tensor::zeros({l}), false);
      p.bn_var = &store.add(name + ".bn.running_var", Tensor::full({l}, 1.0), false);
      projectors_.push_back(p);
    }
  }
}

ContextCache::Capacity ContextFusion::cache_capacity() const {
  ContextCache::Capacity c;
  c.max_utterances = config_.method == FusionMethod::kNone ? 0 : config_.context_utterances;
  if (config_.method == FusionMethod::kChunked && config_.context_frames) {
    // Frames beyond the cap are masked anyway; keep a little more than the
    // cap so the oldest visible frame is always present.
    c.max_utterances = std::max(c.max_utterances, 1 << 20);
    c.max_frames = config_.context_frames;
  }
  return c;
}

MaskSpec ContextFusion::with_prev_cap(const MaskSpec& mask) const {
  MaskSpec s = mask;
  if (config_.context_frames) {
    s.prev_cap_kind = PrevCapKind::kFrames;
    s.prev_cap = *config_.context_frames;
  } else {
    s.prev_cap_kind = PrevCapKind::kUtterances;
    s.prev_cap = config_.context_utterances;
  }
  return s;
}

LayerContext ContextFusion::layer_context(int layer, std::span<const Var> prev,
                                          const MaskSpec& mask, int num_queries,
                                          bool training) const {
  switch (config_.method) {
    case FusionMethod::kNone:
    case FusionMethod::kInputConcat:
      return {};
    case FusionMethod::kEmbedConcat: {
      const std::size_t m = static_cast<std::size_t>(std::max(config_.context_utterances, 0));
      if (prev.size() > m) prev = prev.subspan(prev.size() - m);
      return fuse_embedding_concat(prev, num_queries);
    }
    case FusionMethod::kPooling: {
      const std::size_t m = static_cast<std::size_t>(std::max(config_.context_utterances, 0));
      if (prev.size() > m) prev = prev.subspan(prev.size() - m);
      return fuse_pooled(projectors_.at(static_cast<std::size_t>(layer - 1)), prev, num_queries,
                         training);
    }
    case FusionMethod::kChunked:
      return fuse_chunked(prev, with_prev_cap(mask), num_queries);
  }
  return {};
}

ContextProvider ContextFusion::provider(std::span<const CachedUtterance> history,
                                        const MaskSpec& mask, bool training,
                                        std::vector<Var>* cache_leaves) const {
  return [this, history, mask, training, cache_leaves](Tape& tape, int layer, int num_queries) {
    std::vector<Var> prev;
    for (const CachedUtterance& u : history) {
      const auto l = static_cast<std::size_t>(layer);
      if (l >= u.layers.size()) {
        fail(ErrorKind::kDimension, "cached utterance '" + u.utterance_id + "' has no layer " +
                                        std::to_string(layer));
      }
      Var leaf = tape.leaf(u.layers[l]);
      if (cache_leaves) cache_leaves->push_back(leaf);
      prev.push_back(leaf);
    }
    return layer_context(layer, prev, mask, num_queries, training);
  };
}

ContextProvider ContextFusion::provider_from_vars(std::vector<std::vector<Var>> prev_layers,
                                                  const MaskSpec& mask, bool training) const {
  return [this, prev_layers = std::move(prev_layers), mask, training](Tape&, int layer,
                                                                      int num_queries) {
    std::vector<Var> prev;
    for (const auto& u : prev_layers) prev.push_back(u.at(static_cast<std::size_t>(layer)));
    return layer_context(layer, prev, mask, num_queries, training);
  };
}

}  // namespace cuctx

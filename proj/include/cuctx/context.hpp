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

#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cuctx/conformer.hpp"

namespace cuctx {

// What one previous utterance leaves behind for its successors.
struct CachedUtterance {
  std::string utterance_id;
  Tensor features;             // raw input [T x D_in]
  std::vector<Tensor> layers;  // encoder outputs, layers[l] for l = 0..blocks

  int frames() const { return layers.size() > 1 ? layers[1].rows() : 0; }
};

// Per-conversation FIFO of previous utterances, oldest first. Entries are
// plain values: they re-enter a tape only behind stop_gradient.
class ContextCache {
 public:
  struct Capacity {
    int max_utterances = 1;
    std::optional<int> max_frames;  // keep only what covers this many recent frames
  };

  explicit ContextCache(Capacity capacity) : capacity_(capacity) {}

  void update(const std::string& conversation, CachedUtterance entry);
  void reset(const std::string& conversation);
  void reset_all() { entries_.clear(); }

  std::span<const CachedUtterance> entries(const std::string& conversation) const;
  std::size_t size(const std::string& conversation) const;

 private:
  Capacity capacity_;
  std::map<std::string, std::vector<CachedUtterance>> entries_;
};

// Learned attention-pooling projection of one previous utterance's
// embeddings down to L rows.
struct PoolingProjector {
  Parameter* projection = nullptr;  // E [L x d]
  LayerNormParams bn_affine;        // over the L channels
  Parameter* bn_mean = nullptr;
  Parameter* bn_var = nullptr;
};

struct PoolingResult {
  Var weights;  // A [L x T], rows sum to 1
  Var pooled;   // A * H, [L x d]
};

PoolingResult pool_project(const PoolingProjector& proj, Var h_prev, bool training);

// Method A: [X^{i-M} ; ... ; X^{i-1} ; X^i] along time (fewer if fewer cached).
Tensor fuse_input_audio(const Tensor& current, std::span<const CachedUtterance> cache, int m);

// Methods B, C and D. `prev` holds one previous utterance's layer-l
// embeddings per entry, oldest first; each is placed behind stop_gradient.
LayerContext fuse_embedding_concat(std::span<const Var> prev, int num_queries);
LayerContext fuse_pooled(const PoolingProjector& proj, std::span<const Var> prev,
                         int num_queries, bool training);
LayerContext fuse_chunked(std::span<const Var> prev, const MaskSpec& spec, int num_queries);

class ContextFusion {
 public:
  ContextFusion(const ModelConfig& model, const FusionConfig& fusion, ParameterStore& store,
                Rng& rng);

  FusionMethod method() const { return config_.method; }
  const FusionConfig& config() const { return config_; }
  ContextCache::Capacity cache_capacity() const;
  // Previous-context cap applied to the key axis (method D).
  MaskSpec with_prev_cap(const MaskSpec& mask) const;
  const std::vector<PoolingProjector>& projectors() const { return projectors_; }

  LayerContext layer_context(int layer, std::span<const Var> prev, const MaskSpec& mask,
                             int num_queries, bool training) const;

  // Provider over cached tensors. Each cached tensor becomes a tape leaf;
  // those leaves are appended to `cache_leaves` when given.
  ContextProvider provider(std::span<const CachedUtterance> history, const MaskSpec& mask,
                           bool training, std::vector<Var>* cache_leaves = nullptr) const;
  // Provider over embeddings already on the tape: prev_layers[k][l] is
  // layer l of previous utterance k (oldest first).
  ContextProvider provider_from_vars(std::vector<std::vector<Var>> prev_layers,
                                     const MaskSpec& mask, bool training) const;

 private:
  ModelConfig model_;
  FusionConfig config_;
  std::vector<PoolingProjector> projectors_;  // one per block, method C only
};

}  // namespace cuctx

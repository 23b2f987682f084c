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

#include <optional>
#include <string>
#include <vector>

#include "cuctx/tensor.hpp"

namespace cuctx {

// Segment of the key axis. Previous utterance i-k has id -k, the current
// utterance has id 0.
struct KeySegment {
  int segment_id = 0;
  int length = 0;
  bool operator==(const KeySegment&) const = default;
};

struct AttentionMask {
  BoolMatrix allow;
  std::vector<KeySegment> key_layout;  // oldest -> newest along the key axis

  int num_queries() const { return allow.rows(); }
  int num_keys() const { return allow.cols(); }
  bool operator==(const AttentionMask&) const = default;
};

enum class MaskMode { kNonStreaming, kStreaming };

enum class PrevCapKind {
  kUnlimited,   // every cached frame
  kFrames,      // the most recent `prev_cap` frames across previous utterances
  kUtterances,  // all frames of the most recent `prev_cap` utterances
};

// Frame counts are at the encoder (post-subsampling) resolution.
struct MaskSpec {
  MaskMode mode = MaskMode::kNonStreaming;
  int chunk_size = 1;
  int lookahead = 20;  // frames, rounded up to whole chunks
  std::optional<int> left_context_cap;  // nullopt = unlimited
  PrevCapKind prev_cap_kind = PrevCapKind::kUnlimited;
  int prev_cap = 0;
  std::vector<int> prev_utterance_lengths;  // most recent first

  void validate() const;
  int lookahead_chunks() const;
};

inline constexpr int kUnlimitedLookahead = 1 << 28;

AttentionMask build_current_mask(const MaskSpec& spec, int num_frames);
AttentionMask build_prev_mask(const MaskSpec& spec, int num_queries);
AttentionMask compose(const AttentionMask& prev, const AttentionMask& cur);

// 0/1 grid, one line per query, '|' between key segments, preceded by a
// ruler line labelling each segment.
std::string render_mask(const AttentionMask& mask);

}  // namespace cuctx

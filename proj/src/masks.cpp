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

#include "cuctx/masks.hpp"

#include <numeric>
#include <sstream>

#include "cuctx/error.hpp"

namespace cuctx {

void MaskSpec::validate() const {
  if (mode == MaskMode::kStreaming && chunk_size < 1) {
    fail(ErrorKind::kSpec, "streaming mask needs chunk_size >= 1, got " +
                               std::to_string(chunk_size));
  }
  if (lookahead < 0) fail(ErrorKind::kSpec, "lookahead must be >= 0");
  if (left_context_cap && *left_context_cap < 0) {
    fail(ErrorKind::kSpec, "left context cap must be >= 0");
  }
  if (prev_cap < 0) fail(ErrorKind::kSpec, "previous context cap must be >= 0");
  for (int len : prev_utterance_lengths) {
    if (len < 0) fail(ErrorKind::kSpec, "negative previous utterance length");
  }
}

int MaskSpec::lookahead_chunks() const {
  if (lookahead >= kUnlimitedLookahead) return kUnlimitedLookahead;
  return (lookahead + chunk_size - 1) / chunk_size;
}

AttentionMask build_current_mask(const MaskSpec& spec, int num_frames) {
  spec.validate();
  if (num_frames < 1) fail(ErrorKind::kLength, "current mask needs at least one frame");
  AttentionMask m{BoolMatrix(num_frames, num_frames, spec.mode == MaskMode::kNonStreaming),
                  {{0, num_frames}}};
  if (spec.mode == MaskMode::kNonStreaming) return m;

  const int chunk = spec.chunk_size;
  const long horizon_chunks = spec.lookahead_chunks();
  for (int q = 0; q < num_frames; ++q) {
    const int qc = q / chunk;
    for (int k = 0; k < num_frames; ++k) {
      const int kc = k / chunk;
      bool ok;
      if (kc == qc) {
        ok = true;
      } else if (kc > qc) {
        ok = kc - qc <= horizon_chunks;
      } else {
        ok = !spec.left_context_cap || q - k <= *spec.left_context_cap;
      }
      m.allow.set(q, k, ok);
    }
  }
  return m;
}

AttentionMask build_prev_mask(const MaskSpec& spec, int num_queries) {
  spec.validate();
  const auto& recent_first = spec.prev_utterance_lengths;
  const int total = std::accumulate(recent_first.begin(), recent_first.end(), 0);

  AttentionMask m{BoolMatrix(num_queries, total, false), {}};
  for (auto it = recent_first.rbegin(); it != recent_first.rend(); ++it) {
    const int back = static_cast<int>(std::distance(it, recent_first.rend()));
    m.key_layout.push_back({-back, *it});
  }

  // Number of most recent key frames that stay visible.
  int visible = total;
  switch (spec.prev_cap_kind) {
    case PrevCapKind::kUnlimited:
      break;
    case PrevCapKind::kFrames:
      visible = std::min(total, spec.prev_cap);
      break;
    case PrevCapKind::kUtterances: {
      visible = 0;
      const int n = std::min<int>(spec.prev_cap, static_cast<int>(recent_first.size()));
      for (int i = 0; i < n; ++i) visible += recent_first[static_cast<std::size_t>(i)];
      break;
    }
  }
  for (int q = 0; q < num_queries; ++q)
    for (int k = total - visible; k < total; ++k) m.allow.set(q, k, true);
  return m;
}

AttentionMask compose(const AttentionMask& prev, const AttentionMask& cur) {
  if (prev.num_queries() != cur.num_queries()) {
    fail(ErrorKind::kDimension, "compose: query counts differ (" +
                                    std::to_string(prev.num_queries()) + " vs " +
                                    std::to_string(cur.num_queries()) + ")");
  }
  const int q = cur.num_queries(), kp = prev.num_keys(), kc = cur.num_keys();
  AttentionMask m{BoolMatrix(q, kp + kc, false), prev.key_layout};
  m.key_layout.insert(m.key_layout.end(), cur.key_layout.begin(), cur.key_layout.end());
  for (int r = 0; r < q; ++r) {
    for (int k = 0; k < kp; ++k) m.allow.set(r, k, prev.allow(r, k));
    for (int k = 0; k < kc; ++k) m.allow.set(r, kp + k, cur.allow(r, k));
  }
  return m;
}

std::string render_mask(const AttentionMask& mask) {
  std::ostringstream os;
  os << "queries=" << mask.num_queries() << " keys=" << mask.num_keys() << " layout=";
  for (std::size_t s = 0; s < mask.key_layout.size(); ++s) {
    const auto& seg = mask.key_layout[s];
    os << (s ? "," : "") << (seg.segment_id == 0 ? std::string("cur")
                                                 : "prev" + std::to_string(-seg.segment_id))
       << ':' << seg.length;
  }
  os << '\n';
  const int width = std::to_string(std::max(0, mask.num_queries() - 1)).size();
  // Ruler: 'p' marks previous-utterance keys, 'c' current keys.
  os << std::string(static_cast<std::size_t>(width) + 1, ' ');
  for (std::size_t s = 0; s < mask.key_layout.size(); ++s) {
    if (s) os << '|';
    os << std::string(static_cast<std::size_t>(mask.key_layout[s].length),
                      mask.key_layout[s].segment_id == 0 ? 'c' : 'p');
  }
  os << '\n';
  for (int r = 0; r < mask.num_queries(); ++r) {
    std::string label = std::to_string(r);
    os << std::string(static_cast<std::size_t>(width) - label.size(), ' ') << label << ' ';
    int k = 0;
    for (std::size_t s = 0; s < mask.key_layout.size(); ++s) {
      if (s) os << '|';
      for (int j = 0; j < mask.key_layout[s].length; ++j, ++k) os << (mask.allow(r, k) ? '1' : '0');
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace cuctx

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

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "cuctx/error.hpp"
#include "cuctx/masks.hpp"

namespace cuctx {
namespace {

MaskSpec streaming(int chunk, int lookahead, std::optional<int> left_cap = std::nullopt) {
  MaskSpec s;
  s.mode = MaskMode::kStreaming;
  s.chunk_size = chunk;
  s.lookahead = lookahead;
  s.left_context_cap = left_cap;
  return s;
}

std::vector<int> allowed_keys(const AttentionMask& m, int q) {
  std::vector<int> out;
  for (int k = 0; k < m.num_keys(); ++k) {
    if (m.allow(q, k)) out.push_back(k);
  }
  return out;
}

std::vector<int> range(int lo, int hi) {
  std::vector<int> v;
  for (int i = lo; i < hi; ++i) v.push_back(i);
  return v;
}

// Rule-by-rule reference: keys in the query's chunk are visible; later
// chunks up to the look-ahead (rounded up to whole chunks); earlier frames
// within the left cap.
bool reference_allow(const MaskSpec& s, int q, int k) {
  const int qc = q / s.chunk_size;
  const int kc = k / s.chunk_size;
  const int ahead = (s.lookahead + s.chunk_size - 1) / s.chunk_size;
  if (kc == qc) return true;
  if (kc > qc) return kc - qc <= ahead;
  return !s.left_context_cap || q - k <= *s.left_context_cap;
}

TEST(CurrentMask, NonStreamingIsSolid) {
  MaskSpec s;
  AttentionMask m = build_current_mask(s, 3);
  EXPECT_EQ(m.allow, BoolMatrix(3, 3, true));
  ASSERT_EQ(m.key_layout.size(), 1u);
  EXPECT_EQ(m.key_layout[0].length, 3);
}

TEST(CurrentMask, ChunkThreeNoLookahead) {
  AttentionMask m = build_current_mask(streaming(3, 0), 6);
  EXPECT_EQ(allowed_keys(m, 0), range(0, 3));
  EXPECT_EQ(allowed_keys(m, 3), range(0, 6));
}

TEST(CurrentMask, OneChunkLookahead) {
  AttentionMask m = build_current_mask(streaming(3, 3), 6);
  EXPECT_EQ(allowed_keys(m, 0), range(0, 6));
}

TEST(CurrentMask, MatchesRuleEvaluation) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> chunk(1, 5), look(0, 12), frames(1, 20), cap(-1, 8);
  for (int trial = 0; trial < 200; ++trial) {
    const int c = cap(rng);
    MaskSpec s = streaming(chunk(rng), look(rng), c < 0 ? std::nullopt : std::optional<int>(c));
    const int t = frames(rng);
    AttentionMask m = build_current_mask(s, t);
    for (int q = 0; q < t; ++q) {
      EXPECT_GE(m.allow.row_count(q), 1);
      for (int k = 0; k < t; ++k) ASSERT_EQ(m.allow(q, k), reference_allow(s, q, k)) << q << "," << k;
    }
  }
}

TEST(CurrentMask, NoKeyBeyondLookaheadHorizon) {
  for (int chunk : {1, 2, 3, 4}) {
    for (int look : {0, 1, 3, 7, 20}) {
      MaskSpec s = streaming(chunk, look);
      AttentionMask m = build_current_mask(s, 24);
      for (int q = 0; q < 24; ++q) {
        for (int k = 0; k < 24; ++k) {
          if (m.allow(q, k)) EXPECT_LE(k / chunk, q / chunk + s.lookahead_chunks());
        }
      }
    }
  }
}

TEST(CurrentMask, UnlimitedHorizonIsFull) {
  MaskSpec s = streaming(2, kUnlimitedLookahead);
  EXPECT_EQ(build_current_mask(s, 7).allow, BoolMatrix(7, 7, true));
}

TEST(CurrentMask, ErrorsOnBadSpec) {
  try {
    build_current_mask(streaming(0, 0), 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSpec);
  }
  EXPECT_THROW(build_current_mask(MaskSpec{}, 0), Error);
}

TEST(PrevMask, TwoPreviousSpansAllVisible) {
  MaskSpec s = streaming(3, 0);
  s.prev_utterance_lengths = {9, 6};
  AttentionMask m = build_prev_mask(s, 9);
  EXPECT_EQ(m.num_keys(), 15);
  EXPECT_EQ(m.allow.row_count(0), 15);
  ASSERT_EQ(m.key_layout.size(), 2u);
  EXPECT_EQ(m.key_layout[0], (KeySegment{-2, 6}));
  EXPECT_EQ(m.key_layout[1], (KeySegment{-1, 9}));
}

TEST(PrevMask, ZeroCapHidesEverything) {
  MaskSpec s;
  s.prev_utterance_lengths = {4, 5};
  s.prev_cap_kind = PrevCapKind::kFrames;
  s.prev_cap = 0;
  AttentionMask m = build_prev_mask(s, 3);
  for (int q = 0; q < 3; ++q) EXPECT_EQ(m.allow.row_count(q), 0);
}

TEST(PrevMask, FrameCapKeepsMostRecentFrames) {
  MaskSpec s;
  s.prev_utterance_lengths = {80, 50};
  s.prev_cap_kind = PrevCapKind::kFrames;
  s.prev_cap = 100;
  AttentionMask m = build_prev_mask(s, 2);
  // Layout: utterance i-2 (50 frames) then i-1 (80 frames).
  for (int q = 0; q < 2; ++q) {
    EXPECT_EQ(m.allow.row_count(q), 100);
    for (int k = 0; k < 130; ++k) EXPECT_EQ(m.allow(q, k), k >= 30);
  }
}

TEST(PrevMask, UtteranceCapKeepsMostRecentUtterances) {
  MaskSpec s;
  s.prev_utterance_lengths = {3, 4, 5};
  s.prev_cap_kind = PrevCapKind::kUtterances;
  s.prev_cap = 2;
  AttentionMask m = build_prev_mask(s, 1);
  EXPECT_EQ(allowed_keys(m, 0), range(5, 12));
}

TEST(Compose, EmptyPrevEqualsCurrent) {
  MaskSpec s = streaming(2, 0);
  AttentionMask cur = build_current_mask(s, 5);
  AttentionMask prev = build_prev_mask(s, 5);
  AttentionMask m = compose(prev, cur);
  EXPECT_EQ(m.allow, cur.allow);
  EXPECT_EQ(m.key_layout, cur.key_layout);
}

TEST(Compose, GeometryAndCounts) {
  MaskSpec s = streaming(3, 0);
  s.prev_utterance_lengths = {9, 6};
  AttentionMask prev = build_prev_mask(s, 9);
  AttentionMask cur = build_current_mask(s, 9);
  AttentionMask m = compose(prev, cur);
  EXPECT_EQ(m.num_queries(), 9);
  EXPECT_EQ(m.num_keys(), 24);
  EXPECT_EQ(m.allow.row_count(0), 15 + 3);
  for (int q = 0; q < 9; ++q) {
    EXPECT_EQ(m.allow.row_count(q), prev.allow.row_count(q) + cur.allow.row_count(q));
  }
  int total = 0;
  for (const auto& seg : m.key_layout) total += seg.length;
  EXPECT_EQ(total, 24);
}

TEST(Compose, AssociativeOverThreeSegments) {
  MaskSpec s = streaming(2, 2);
  AttentionMask a = build_current_mask(s, 4);
  s.prev_utterance_lengths = {3};
  AttentionMask b = build_prev_mask(s, 4);
  AttentionMask c = build_current_mask(streaming(1, 0), 4);
  EXPECT_EQ(compose(compose(a, b), c), compose(a, compose(b, c)));
}

TEST(Compose, QueryMismatchIsDimensionError) {
  try {
    compose(build_current_mask(MaskSpec{}, 3), build_current_mask(MaskSpec{}, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
}

// Rendered grids for four canonical specs, compared with checked-in files.
// Set CUCTX_UPDATE_GOLDEN=1 to rewrite them.
void expect_golden(const std::string& name, const std::string& text) {
  const std::string path = std::string(CUCTX_GOLDEN_DIR) + "/" + name;
  if (std::getenv("CUCTX_UPDATE_GOLDEN")) {
    std::ofstream(path) << text;
    return;
  }
  std::ifstream in(path);
  ASSERT_TRUE(in) << "missing golden file " << path;
  std::stringstream want;
  want << in.rdbuf();
  EXPECT_EQ(text, want.str());
}

TEST(MaskGolden, CanonicalSpecs) {
  expect_golden("mask_full.txt", render_mask(build_current_mask(MaskSpec{}, 6)));
  expect_golden("mask_chunk3.txt", render_mask(build_current_mask(streaming(3, 0), 9)));
  expect_golden("mask_chunk3_lookahead3_left3.txt",
                render_mask(build_current_mask(streaming(3, 3, 3), 9)));
  MaskSpec s = streaming(3, 0);
  s.prev_utterance_lengths = {9, 6};
  expect_golden("mask_prev9_prev6_chunk3.txt",
                render_mask(compose(build_prev_mask(s, 9), build_current_mask(s, 9))));
}

}  // namespace
}  // namespace cuctx

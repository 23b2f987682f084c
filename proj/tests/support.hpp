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

#include <random>
#include <span>
#include <vector>

#include "cuctx/manifest.hpp"
#include "cuctx/tensor.hpp"

namespace cuctx::testing {

using TestRng = std::mt19937_64;

Tensor random_tensor(TestRng& rng, std::vector<int> shape, double lo = -1.0, double hi = 1.0);

// c[i,j] = sum_p a[i,p] b[p,j], plain triple loop.
Tensor naive_matmul(const Tensor& a, const Tensor& b);

// -log of the summed probability of every blank/label alignment through the
// T x (U+1) lattice, found by explicit enumeration. Also reports how many
// alignments were visited.
struct EnumeratedLoss {
  double loss = 0.0;
  long paths = 0;
};
EnumeratedLoss enumerate_transducer_loss(const Tensor& log_probs, std::span<const int> labels,
                                         int frames);

// Fewest steps any assignment of conversations to rows (in any order within
// a row) needs when each row packs next-fit into `capacity`.
int exhaustive_min_steps(const Manifest& manifest, int rows, int capacity);

// Conversations given as lists of utterance frame counts.
Manifest manifest_from_lengths(const std::vector<std::vector<int>>& conversations);

// Six conversations for a 3-row, 7-frame layout: over five steps the
// single-utterance baseline fills 67 frames and splicing fills 95.
Manifest reference_manifest();

Manifest random_manifest(TestRng& rng, int max_conversations, int max_utterances, int capacity);

}  // namespace cuctx::testing

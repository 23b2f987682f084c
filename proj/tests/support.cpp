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

#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace cuctx::testing {

Tensor random_tensor(TestRng& rng, std::vector<int> shape, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = dist(rng);
  return t;
}

Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  Tensor c({a.rows(), b.cols()});
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (int p = 0; p < a.cols(); ++p) s += a(i, p) * b(p, j);
      c(i, j) = s;
    }
  }
  return c;
}

EnumeratedLoss enumerate_transducer_loss(const Tensor& log_probs, std::span<const int> labels,
                                         int frames) {
  const int u1 = static_cast<int>(labels.size()) + 1;
  EnumeratedLoss out;
  double total = 0.0;
  // Walk every path from (0,0); a blank at (t,u) moves to (t+1,u), a label to (t,u+1).
  std::function<void(int, int, double)> walk = [&](int t, int u, double logp) {
    const int row = t * u1 + u;
    if (u < u1 - 1) {
      walk(t, u + 1, logp + log_probs(row, labels[static_cast<std::size_t>(u)]));
    }
    const double blank = logp + log_probs(row, 0);
    if (t == frames - 1) {
      if (u == u1 - 1) {
        total += std::exp(blank);
        ++out.paths;
      }
      return;
    }
    walk(t + 1, u, blank);
  };
  walk(0, 0, 0.0);
  out.loss = -std::log(total);
  return out;
}

namespace {

int next_fit_steps(const Manifest& m, const std::vector<int>& order, int capacity) {
  int steps = 0;
  int fill = capacity;
  for (int c : order) {
    for (const auto& u : m.conversations[static_cast<std::size_t>(c)].utterances) {
      if (fill + u.frame_count > capacity) {
        ++steps;
        fill = 0;
      }
      fill += u.frame_count;
    }
  }
  return steps;
}

int best_row_steps(const Manifest& m, std::vector<int> convs, int capacity) {
  std::sort(convs.begin(), convs.end());
  int best = std::numeric_limits<int>::max();
  do {
    best = std::min(best, next_fit_steps(m, convs, capacity));
  } while (std::next_permutation(convs.begin(), convs.end()));
  return best;
}

}  // namespace

int exhaustive_min_steps(const Manifest& manifest, int rows, int capacity) {
  const int n = static_cast<int>(manifest.conversations.size());
  if (n == 0) return 0;
  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  int best = std::numeric_limits<int>::max();
  while (true) {
    int worst = 0;
    for (int r = 0; r < rows; ++r) {
      std::vector<int> convs;
      for (int c = 0; c < n; ++c) {
        if (assign[static_cast<std::size_t>(c)] == r) convs.push_back(c);
      }
      worst = std::max(worst, best_row_steps(manifest, convs, capacity));
    }
    best = std::min(best, worst);
    int k = 0;
    while (k < n && ++assign[static_cast<std::size_t>(k)] == rows) assign[static_cast<std::size_t>(k++)] = 0;
    if (k == n) break;
  }
  return best;
}

Manifest manifest_from_lengths(const std::vector<std::vector<int>>& conversations) {
  Manifest m;
  for (std::size_t c = 0; c < conversations.size(); ++c) {
    Conversation conv;
    conv.id = std::string(1, static_cast<char>('A' + c % 26)) +
              (c >= 26 ? std::to_string(c / 26) : std::string());
    for (std::size_t u = 0; u < conversations[c].size(); ++u) {
      ManifestUtterance utt;
      utt.utterance_id = conv.id + std::to_string(u);
      utt.frame_count = conversations[c][u];
      utt.feature_path = "-";
      conv.utterances.push_back(utt);
    }
    m.conversations.push_back(std::move(conv));
  }
  return m;
}

Manifest reference_manifest() {
  return manifest_from_lengths({{3, 4, 7, 5, 6},
                                {7, 7, 5, 3, 2},
                                {2, 3, 6, 5, 2, 3},
                                {2, 4, 3, 4},
                                {2, 3, 4},
                                {2, 2, 3}});
}

Manifest random_manifest(TestRng& rng, int max_conversations, int max_utterances, int capacity) {
  std::uniform_int_distribution<int> convs(0, max_conversations);
  std::uniform_int_distribution<int> utts(1, max_utterances);
  std::uniform_int_distribution<int> frames(1, capacity);
  std::vector<std::vector<int>> lengths(static_cast<std::size_t>(convs(rng)));
  for (auto& c : lengths) {
    c.resize(static_cast<std::size_t>(utts(rng)));
    for (int& f : c) f = frames(rng);
  }
  return manifest_from_lengths(lengths);
}

}  // namespace cuctx::testing

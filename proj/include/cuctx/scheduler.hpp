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
#include <string>
#include <vector>

#include "cuctx/manifest.hpp"

namespace cuctx {

struct Segment {
  int conversation = 0;  // index into Manifest::conversations
  int utterance = 0;     // index into that conversation's utterances
  int frames = 0;
  bool context_reset = false;  // first utterance of its conversation
};

struct RowStep {
  std::vector<Segment> segments;
  int padding = 0;

  int filled() const;
};

struct BatchPlan {
  int rows = 0;
  int capacity = 0;
  bool splicing = false;
  std::vector<std::vector<RowStep>> steps;    // steps[s][r]
  std::vector<std::vector<int>> assignment;   // conversations per row, in row order

  int step_count() const { return static_cast<int>(steps.size()); }
  int filled_frames() const;
};

// Conversations go to rows longest-total-first onto the least-loaded row.
// Without splicing every row-step carries one utterance; with splicing a row
// packs consecutive utterances until the next would overflow the capacity.
// `max_steps` > 0 keeps only that many leading steps.
BatchPlan plan(const Manifest& manifest, int rows, int capacity, bool splicing,
               int max_steps = 0);

// Filled frames over rows * capacity * steps; 1.0 for an empty plan.
double utilization(const BatchPlan& plan);

// Structured text, one row-step per line.
std::string export_plan(const BatchPlan& plan, const Manifest& manifest);
// Occupancy grid: one line per row, one cell of `capacity` characters per
// step. Conversations are lettered in manifest order; alternate utterances
// of a conversation switch case; '.' is padding.
std::string render_plan(const BatchPlan& plan, const Manifest& manifest);

enum class CacheDirective { kCarry, kReset };

struct StreamItem {
  int step = 0;
  int row = 0;
  Segment segment;
  CacheDirective directive = CacheDirective::kCarry;
  const Conversation* conversation = nullptr;
  const ManifestUtterance* utterance = nullptr;
  Tensor features;
};

using FeatureLoader = std::function<Tensor(const ManifestUtterance&)>;

// Reads the utterance's feature file and checks its frame count.
Tensor load_utterance_features(const ManifestUtterance& utterance);

// Step-major stream (rows in order within a step). Each row's subsequence
// visits its conversations' utterances in manifest order, so a per-
// conversation cache always holds the right predecessors.
std::vector<StreamItem> iterate(const BatchPlan& plan, const Manifest& manifest,
                                const FeatureLoader& loader = load_utterance_features);

}  // namespace cuctx

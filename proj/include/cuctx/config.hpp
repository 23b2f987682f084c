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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "cuctx/masks.hpp"

namespace cuctx {

enum class FusionMethod {
  kNone,
  kInputConcat,  // A: previous utterances' features prepended along time
  kEmbedConcat,  // B: cached per-layer embeddings prepended to keys/values
  kPooling,      // C: cached embeddings attention-pooled to L rows first
  kChunked,      // D: as B, with capped previous context and chunked access
};

const char* to_string(FusionMethod m);
FusionMethod parse_fusion_method(const std::string& s);

// Desk-scale defaults. full_scale() returns the full-size preset.
struct ModelConfig {
  int input_dim = 16;
  int blocks = 4;
  int d_model = 64;
  int heads = 4;
  int ffn_ratio = 4;
  int conv_kernel = 7;
  int subsample_channels = 8;
  int predictor_embed = 32;
  int predictor_hidden = 64;
  int joint_dim = 64;
  int vocab = 20;  // output tokens excluding blank

  static ModelConfig full_scale();
  void validate() const;
  int output_size() const { return vocab + 1; }
  bool operator==(const ModelConfig&) const = default;
};

struct FusionConfig {
  FusionMethod method = FusionMethod::kNone;
  int context_utterances = 1;              // M
  std::optional<int> context_frames;       // frame budget (method D cap)
  int pooling_rows = 32;                   // L
  bool allow_non_streaming = false;        // lets method D run with a full current mask
  bool operator==(const FusionConfig&) const = default;
};

struct SchedulerConfig {
  int rows = 3;
  int capacity = 7;
  bool splicing = true;
  int max_steps = 0;  // 0 = plan everything
  bool operator==(const SchedulerConfig&) const = default;
};

struct TrainingConfig {
  double learning_rate = 1e-3;
  int steps = 200;
  std::uint64_t seed = 1;
  bool operator==(const TrainingConfig&) const = default;
};

struct RunConfig {
  ModelConfig model;
  FusionConfig fusion;
  MaskSpec mask;
  SchedulerConfig scheduler;
  TrainingConfig training;

  void validate() const;
};

bool operator==(const MaskSpec& a, const MaskSpec& b);
bool operator==(const RunConfig& a, const RunConfig& b);

// Sectioned key = value text ([model], [fusion], [mask], [scheduler],
// [training]). Missing keys keep their defaults; unknown keys are errors.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& config);

}  // namespace cuctx

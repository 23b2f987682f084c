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
#include <vector>

#include "cuctx/config.hpp"
#include "cuctx/manifest.hpp"
#include "cuctx/scheduler.hpp"

namespace cuctx::cli {

struct PlanOptions {
  std::string manifest;
  std::optional<std::string> config;
  std::optional<std::string> out;  // structured plan export (splicing mode)
};

struct TrainOptions {
  std::string manifest;
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::string out = "run";  // directory for model.ckpt, loss.txt, config.ini
};

struct DecodeOptions {
  std::string manifest;
  std::string checkpoint;
  std::optional<std::string> config;  // defaults to config.ini beside the checkpoint
  std::optional<std::string> out;
};

struct MaskDumpOptions {
  std::optional<std::string> config;
  std::optional<std::string> mode;
  std::optional<int> chunk;
  std::optional<std::string> lookahead;
  std::optional<std::string> left_cap;
  std::vector<int> prev;  // previous utterance lengths, most recent first
  std::optional<std::string> prev_cap_kind;
  std::optional<int> prev_cap;
  int frames = 9;
  std::optional<std::string> out;
};

struct GradcheckOptions {
  std::optional<std::string> config;
  std::uint64_t seed = 1;
};

struct SynthOptions {
  std::string out = "toy";
  std::uint64_t seed = 1;
  int conversations = 3;
  int utterances = 3;
  int input_dim = 16;
  int vocab = 8;
};

// Each command writes its report to `out` and returns the process exit
// code. Library errors propagate as cuctx::Error.
int run_plan(const PlanOptions& options, std::ostream& out);
int run_train(const TrainOptions& options, std::ostream& out);
int run_decode(const DecodeOptions& options, std::ostream& out);
int run_mask_dump(const MaskDumpOptions& options, std::ostream& out);
int run_gradcheck(const GradcheckOptions& options, std::ostream& out);
int run_synth(const SynthOptions& options, std::ostream& out);

// Plan report for both scheduling modes plus their difference.
std::string plan_report(const Manifest& manifest, const SchedulerConfig& scheduler);

// The model used by `gradcheck` when no config is given.
RunConfig gradcheck_config();

}  // namespace cuctx::cli

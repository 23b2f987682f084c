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
#include <map>
#include <string>

#include "cuctx/config.hpp"
#include "cuctx/manifest.hpp"
#include "cuctx/scheduler.hpp"

namespace cuctx {

// Small learnable corpus: each token id owns a random prototype frame and an
// utterance is its label sequence rendered as runs of noisy prototypes.
struct ToyCorpusOptions {
  int conversations = 3;
  int utterances = 3;
  int min_tokens = 2;
  int max_tokens = 4;
  int frames_per_token = 8;
  int input_dim = 16;
  int vocab = 8;
  double noise = 0.1;
  std::uint64_t seed = 1;
};

struct ToyCorpus {
  Manifest manifest;
  std::map<std::string, Tensor> features;  // keyed by feature_path

  FeatureLoader loader() const;
};

ToyCorpus make_toy_corpus(const ToyCorpusOptions& options);
// A small model and schedule that memorise a toy corpus in a few hundred steps.
RunConfig toy_training_config();

// Writes the feature files and manifest.tsv under `dir`; returns the manifest path.
std::string write_toy_corpus(const ToyCorpus& corpus, const std::string& dir);

}  // namespace cuctx

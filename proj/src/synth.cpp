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

#include "cuctx/synth.hpp"

#include <filesystem>
#include <fstream>
#include <random>

#include "cuctx/error.hpp"

namespace cuctx {

FeatureLoader ToyCorpus::loader() const {
  return [this](const ManifestUtterance& u) {
    auto it = features.find(u.feature_path);
    if (it == features.end()) fail(ErrorKind::kIo, "no features for '" + u.feature_path + "'");
    return it->second;
  };
}

ToyCorpus make_toy_corpus(const ToyCorpusOptions& o) {
  if (o.vocab < 1 || o.input_dim < 1 || o.min_tokens < 1 || o.max_tokens < o.min_tokens ||
      o.frames_per_token < 1) {
    fail(ErrorKind::kConfig, "invalid toy corpus options");
  }
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> token(1, o.vocab);
  std::uniform_int_distribution<int> length(o.min_tokens, o.max_tokens);

  std::vector<Tensor> prototypes;
  for (int v = 0; v <= o.vocab; ++v) {
    Tensor p = Tensor::zeros({o.input_dim});
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = gauss(rng);
    prototypes.push_back(std::move(p));
  }

  ToyCorpus corpus;
  for (int c = 0; c < o.conversations; ++c) {
    Conversation conv;
    conv.id = "conv" + std::to_string(c);
    for (int u = 0; u < o.utterances; ++u) {
      ManifestUtterance utt;
      utt.utterance_id = "utt" + std::to_string(u);
      const int n = length(rng);
      for (int k = 0; k < n; ++k) utt.labels.push_back(token(rng));
      const int frames = n * o.frames_per_token;
      Tensor x = Tensor::zeros({frames, o.input_dim});
      for (int t = 0; t < frames; ++t) {
        const auto& proto = prototypes[static_cast<std::size_t>(utt.labels[static_cast<std::size_t>(t / o.frames_per_token)])];
        for (int d = 0; d < o.input_dim; ++d) x(t, d) = proto[static_cast<std::size_t>(d)] + o.noise * gauss(rng);
      }
      utt.frame_count = frames;
      utt.feature_path = conv.id + "_" + utt.utterance_id + ".feat";
      corpus.features[utt.feature_path] = std::move(x);
      conv.utterances.push_back(std::move(utt));
    }
    corpus.manifest.conversations.push_back(std::move(conv));
  }
  return corpus;
}

RunConfig toy_training_config() {
  RunConfig c;
  c.model.blocks = 2;
  c.model.d_model = 32;
  c.model.heads = 4;
  c.model.predictor_hidden = 32;
  c.model.joint_dim = 32;
  c.model.vocab = 8;
  c.fusion.method = FusionMethod::kEmbedConcat;
  c.scheduler.capacity = 64;
  c.training.learning_rate = 3e-3;
  c.training.steps = 200;
  return c;
}

std::string write_toy_corpus(const ToyCorpus& corpus, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [path, x] : corpus.features) {
    write_features(x, (std::filesystem::path(dir) / path).string());
  }
  const std::string manifest_path = (std::filesystem::path(dir) / "manifest.tsv").string();
  std::ofstream out(manifest_path);
  if (!out) fail(ErrorKind::kIo, "cannot write '" + manifest_path + "'");
  write_manifest(corpus.manifest, out);
  return manifest_path;
}

}  // namespace cuctx

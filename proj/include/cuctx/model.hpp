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
#include <span>
#include <string>
#include <vector>

#include "cuctx/context.hpp"
#include "cuctx/scheduler.hpp"
#include "cuctx/transducer.hpp"

namespace cuctx {

// Conformer-Transducer with cross-utterance context. Owns every parameter;
// initialisation is a pure function of the config (seed included).
class ContextualTransducer {
 public:
  explicit ContextualTransducer(const RunConfig& config);
  ContextualTransducer(const ContextualTransducer&) = delete;
  ContextualTransducer& operator=(const ContextualTransducer&) = delete;

  struct Encoded {
    EncoderOutput output;
    Var current;  // encoder rows belonging to the current utterance
  };

  const RunConfig& config() const { return config_; }
  ParameterStore& params() { return store_; }
  const ParameterStore& params() const { return store_; }
  const ConformerEncoder& encoder() const { return encoder_; }
  const Predictor& predictor() const { return predictor_; }
  const JointNetwork& joint() const { return joint_; }
  const ContextFusion& fusion() const { return fusion_; }

  ContextCache make_cache() const { return ContextCache(fusion_.cache_capacity()); }

  // `history` holds this conversation's previous utterances, oldest first.
  Encoded encode(Tape& tape, const Tensor& features, std::span<const CachedUtterance> history,
                 bool training, std::vector<Var>* cache_leaves = nullptr) const;
  // Independent utterances (distinct conversations) encoded together;
  // batch-norm statistics are shared across them in training mode.
  std::vector<Encoded> encode_batch(Tape& tape, std::span<const Tensor> features,
                                    std::span<const std::span<const CachedUtterance>> histories,
                                    bool training, std::vector<Var>* cache_leaves = nullptr) const;
  Var loss(Var current, std::span<const int> labels) const;
  std::vector<int> decode(const Tensor& current) const;
  CachedUtterance cache_entry(const std::string& utterance_id, const Tensor& features,
                              const Encoded& encoded) const;

 private:
  RunConfig config_;
  ParameterStore store_;
  Rng rng_;
  ConformerEncoder encoder_;
  Predictor predictor_;
  JointNetwork joint_;
  ContextFusion fusion_;
};

class Adam {
 public:
  struct Options {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.98;
    double epsilon = 1e-9;
  };

  Adam(ParameterStore& store, Options options);
  void step();

 private:
  Options options_;
  std::vector<Parameter*> params_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  long t_ = 0;
};

struct TrainingExample {
  std::string conversation;
  std::string utterance_id;
  Tensor features;
  std::vector<int> labels;
  bool reset = false;  // first utterance of its conversation
};

std::vector<TrainingExample> examples_from_stream(const std::vector<StreamItem>& stream);

// Splits an ordered example list into waves of mutually independent
// utterances: the k-th utterance of every conversation lands in wave k.
std::vector<std::vector<std::size_t>> independent_waves(std::span<const TrainingExample> examples);

// Full-batch training: every step runs all examples wave by wave
// (maintaining the per-conversation caches), averages the loss, and takes
// one Adam step.
class Trainer {
 public:
  Trainer(ContextualTransducer& model, double learning_rate);

  // Mean loss before the update. Throws a numeric error on a non-finite loss.
  double step(std::span<const TrainingExample> examples);
  int steps_taken() const { return steps_; }

 private:
  ContextualTransducer& model_;
  Adam adam_;
  int steps_ = 0;
};

// Mean loss over the examples without touching parameters or statistics.
double evaluate_loss(const ContextualTransducer& model, std::span<const TrainingExample> examples);

struct Hypothesis {
  std::string conversation;
  std::string utterance_id;
  std::vector<int> tokens;
  std::vector<int> reference;
  int errors = 0;
};

struct DecodeReport {
  std::vector<Hypothesis> hypotheses;
  long errors = 0;
  long reference_tokens = 0;

  double token_error_rate() const;
};

DecodeReport decode_examples(const ContextualTransducer& model,
                             std::span<const TrainingExample> examples);

}  // namespace cuctx

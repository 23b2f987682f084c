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

#include "cuctx/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cuctx/error.hpp"

namespace cuctx {

ContextualTransducer::ContextualTransducer(const RunConfig& config)
    : config_(config),
      rng_((config.validate(), config.training.seed)),
      encoder_(config.model, store_, rng_),
      predictor_(config.model, store_, rng_),
      joint_(config.model, store_, rng_),
      fusion_(config.model, config.fusion, store_, rng_) {}

ContextualTransducer::Encoded ContextualTransducer::encode(
    Tape& tape, const Tensor& features, std::span<const CachedUtterance> history, bool training,
    std::vector<Var>* cache_leaves) const {
  using History = std::span<const CachedUtterance>;
  return encode_batch(tape, std::span<const Tensor>(&features, 1), std::span<const History>(&history, 1),
                      training, cache_leaves)
      .front();
}

std::vector<ContextualTransducer::Encoded> ContextualTransducer::encode_batch(
    Tape& tape, std::span<const Tensor> features,
    std::span<const std::span<const CachedUtterance>> histories, bool training,
    std::vector<Var>* cache_leaves) const {
  if (histories.size() != features.size()) {
    fail(ErrorKind::kDimension, "one history per utterance expected");
  }
  const std::size_t n = features.size();
  std::vector<Encoded> out(n);
  if (fusion_.method() == FusionMethod::kInputConcat) {
    std::vector<Tensor> joined;
    for (std::size_t i = 0; i < n; ++i) {
      joined.push_back(fuse_input_audio(features[i], histories[i], config_.fusion.context_utterances));
    }
    auto enc = encoder_.encode_batch(tape, joined, config_.mask, {}, training);
    for (std::size_t i = 0; i < n; ++i) {
      // The current utterance owns the trailing rows of the joint sequence.
      const int own = subsampled_length(features[i].rows());
      const int total = enc[i].subsampled_length;
      out[i].output = std::move(enc[i]);
      out[i].current = slice_rows(out[i].output.final(), total - own, own);
    }
    return out;
  }
  std::vector<ContextProvider> providers(n);
  std::vector<const ContextProvider*> contexts(n, nullptr);
  for (std::size_t i = 0; i < n; ++i) {
    if (fusion_.method() != FusionMethod::kNone && !histories[i].empty()) {
      providers[i] = fusion_.provider(histories[i], config_.mask, training, cache_leaves);
      contexts[i] = &providers[i];
    }
  }
  auto enc = encoder_.encode_batch(tape, features, config_.mask, contexts, training);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].output = std::move(enc[i]);
    out[i].current = out[i].output.final();
  }
  return out;
}

Var ContextualTransducer::loss(Var current, std::span<const int> labels) const {
  Tape& tape = *current.tape();
  Var pred = predictor_.forward(tape, labels);
  Var lp = joint_.forward(current, pred);
  return transducer_loss(lp, labels, current.value().rows());
}

std::vector<int> ContextualTransducer::decode(const Tensor& current) const {
  return greedy_decode(predictor_, joint_, current);
}

CachedUtterance ContextualTransducer::cache_entry(const std::string& utterance_id,
                                                  const Tensor& features,
                                                  const Encoded& encoded) const {
  CachedUtterance c;
  c.utterance_id = utterance_id;
  c.features = features;
  if (fusion_.method() != FusionMethod::kInputConcat) {
    for (const Var& v : encoded.output.layers) c.layers.push_back(v.value());
  }
  return c;
}

Adam::Adam(ParameterStore& store, Options options)
    : options_(options), params_(store.trainable()) {
  for (Parameter* p : params_) {
    m_.push_back(Tensor::zeros(p->value.shape()));
    v_.push_back(Tensor::zeros(p->value.shape()));
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    if (p.grad.size() != p.value.size()) continue;
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad[k];
      m[k] = options_.beta1 * m[k] + (1.0 - options_.beta1) * g;
      v[k] = options_.beta2 * v[k] + (1.0 - options_.beta2) * g * g;
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      p.value[k] -= options_.learning_rate * mhat / (std::sqrt(vhat) + options_.epsilon);
    }
  }
}

std::vector<TrainingExample> examples_from_stream(const std::vector<StreamItem>& stream) {
  std::vector<TrainingExample> out;
  out.reserve(stream.size());
  for (const StreamItem& item : stream) {
    out.push_back({item.conversation->id, item.utterance->utterance_id, item.features,
                   item.utterance->labels, item.directive == CacheDirective::kReset});
  }
  return out;
}

Trainer::Trainer(ContextualTransducer& model, double learning_rate)
    : model_(model), adam_(model.params(), Adam::Options{learning_rate}) {}

std::vector<std::vector<std::size_t>> independent_waves(std::span<const TrainingExample> examples) {
  std::vector<std::vector<std::size_t>> waves;
  std::map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const std::size_t wave = seen[examples[i].conversation]++;
    if (wave >= waves.size()) waves.resize(wave + 1);
    waves[wave].push_back(i);
  }
  return waves;
}

double Trainer::step(std::span<const TrainingExample> examples) {
  model_.params().zero_grad();
  ContextCache cache = model_.make_cache();
  double total = 0.0;
  const double weight = examples.empty() ? 0.0 : 1.0 / static_cast<double>(examples.size());
  for (const auto& wave : independent_waves(examples)) {
    std::vector<Tensor> features;
    std::vector<std::span<const CachedUtterance>> histories;
    for (std::size_t i : wave) {
      const TrainingExample& ex = examples[i];
      if (ex.reset) cache.reset(ex.conversation);
      features.push_back(ex.features);
    }
    for (std::size_t i : wave) histories.push_back(cache.entries(examples[i].conversation));
    Tape tape;
    auto enc = model_.encode_batch(tape, features, histories, true);
    std::vector<Var> losses;
    for (std::size_t k = 0; k < wave.size(); ++k) {
      const TrainingExample& ex = examples[wave[k]];
      Var loss = model_.loss(enc[k].current, ex.labels);
      const double value = loss.value()[0];
      if (!std::isfinite(value)) {
        fail(ErrorKind::kNumeric, "non-finite loss at step " + std::to_string(steps_) +
                                      " (utterance '" + ex.utterance_id + "')");
      }
      total += value;
      losses.push_back(loss);
    }
    Var wave_loss = losses.front();
    for (std::size_t k = 1; k < losses.size(); ++k) wave_loss = add(wave_loss, losses[k]);
    tape.backward(scale(wave_loss, weight));
    for (std::size_t k = 0; k < wave.size(); ++k) {
      const TrainingExample& ex = examples[wave[k]];
      cache.update(ex.conversation, model_.cache_entry(ex.utterance_id, ex.features, enc[k]));
    }
  }
  adam_.step();
  ++steps_;
  return total * weight;
}

double evaluate_loss(const ContextualTransducer& model, std::span<const TrainingExample> examples) {
  ContextCache cache = model.make_cache();
  double total = 0.0;
  for (const TrainingExample& ex : examples) {
    if (ex.reset) cache.reset(ex.conversation);
    Tape tape(false);
    auto enc = model.encode(tape, ex.features, cache.entries(ex.conversation), false);
    total += model.loss(enc.current, ex.labels).value()[0];
    cache.update(ex.conversation, model.cache_entry(ex.utterance_id, ex.features, enc));
  }
  return examples.empty() ? 0.0 : total / static_cast<double>(examples.size());
}

double DecodeReport::token_error_rate() const {
  return static_cast<double>(errors) / static_cast<double>(std::max(1L, reference_tokens));
}

DecodeReport decode_examples(const ContextualTransducer& model,
                             std::span<const TrainingExample> examples) {
  DecodeReport report;
  ContextCache cache = model.make_cache();
  for (const TrainingExample& ex : examples) {
    if (ex.reset) cache.reset(ex.conversation);
    Tape tape(false);
    auto enc = model.encode(tape, ex.features, cache.entries(ex.conversation), false);
    Hypothesis h;
    h.conversation = ex.conversation;
    h.utterance_id = ex.utterance_id;
    h.tokens = model.decode(enc.current.value());
    h.reference = ex.labels;
    h.errors = edit_distance(h.tokens, h.reference);
    report.errors += h.errors;
    report.reference_tokens += static_cast<long>(h.reference.size());
    report.hypotheses.push_back(std::move(h));
    cache.update(ex.conversation, model.cache_entry(ex.utterance_id, ex.features, enc));
  }
  return report;
}

}  // namespace cuctx

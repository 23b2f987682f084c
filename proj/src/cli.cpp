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

#include "cuctx/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "cuctx/error.hpp"
#include "cuctx/gradcheck.hpp"
#include "cuctx/model.hpp"
#include "cuctx/params.hpp"
#include "cuctx/synth.hpp"

namespace cuctx::cli {

namespace {

RunConfig config_or_default(const std::optional<std::string>& path) {
  RunConfig c = path ? load_config(*path) : RunConfig{};
  c.validate();
  return c;
}

// Truncated to 0.1 pp, so 95/105 reads 90.4%. The guard absorbs ratios such
// as 0.7 landing just below their decimal value.
double tenths_of_percent(double fraction) { return std::floor(fraction * 1000.0 + 1e-9); }

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", tenths_of_percent(fraction) / 10.0);
  return buf;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

void check_widths(const std::vector<TrainingExample>& examples, const ModelConfig& model) {
  for (const auto& ex : examples) {
    if (ex.features.cols() != model.input_dim) {
      fail(ErrorKind::kConfig, "utterance '" + ex.utterance_id + "' has feature width " +
                                   std::to_string(ex.features.cols()) +
                                   ", model.input_dim is " + std::to_string(model.input_dim));
    }
  }
}

// Conversation-ordered examples straight from the manifest.
std::vector<TrainingExample> manifest_examples(const Manifest& manifest) {
  std::vector<TrainingExample> out;
  for (const auto& conv : manifest.conversations) {
    for (std::size_t u = 0; u < conv.utterances.size(); ++u) {
      const auto& utt = conv.utterances[u];
      out.push_back({conv.id, utt.utterance_id, load_utterance_features(utt), utt.labels, u == 0});
    }
  }
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write '" + path + "'");
  out << text;
}

}  // namespace

std::string plan_report(const Manifest& manifest, const SchedulerConfig& s) {
  std::ostringstream os;
  os << "manifest: " << manifest.conversations.size() << " conversations, "
     << manifest.utterance_count() << " utterances, " << manifest.total_frames() << " frames\n";
  os << "rows=" << s.rows << " capacity=" << s.capacity;
  if (s.max_steps > 0) os << " window=" << s.max_steps << " steps";
  os << "\n";
  double util[2] = {0.0, 0.0};
  for (int mode = 0; mode < 2; ++mode) {
    const bool splicing = mode == 1;
    BatchPlan p = plan(manifest, s.rows, s.capacity, splicing, s.max_steps);
    util[mode] = utilization(p);
    os << "\n[" << (splicing ? "splicing" : "no splicing") << "]\n";
    os << render_plan(p, manifest);
    os << p.step_count() << " steps, " << p.filled_frames() << "/"
       << static_cast<long>(p.rows) * p.capacity * p.step_count() << " frames filled, utilization "
       << percent(util[mode]) << " (" << fixed(util[mode], 4) << ")\n";
  }
  const double delta = (tenths_of_percent(util[1]) - tenths_of_percent(util[0])) / 10.0;
  os << "\ndelta: " << (delta >= 0.0 ? "+" : "") << fixed(delta, 1) << " pp\n";
  return os.str();
}

int run_plan(const PlanOptions& o, std::ostream& out) {
  const RunConfig config = config_or_default(o.config);
  const Manifest manifest = load_manifest(o.manifest);
  out << plan_report(manifest, config.scheduler);
  if (o.out) {
    const auto& s = config.scheduler;
    write_file(*o.out, export_plan(plan(manifest, s.rows, s.capacity, s.splicing, s.max_steps), manifest));
  }
  return 0;
}

int run_train(const TrainOptions& o, std::ostream& out) {
  RunConfig config = config_or_default(o.config);
  if (o.seed) config.training.seed = *o.seed;
  const Manifest manifest = load_manifest(o.manifest);
  const auto& s = config.scheduler;
  // Training always covers the whole plan; the step window only shapes reports.
  const BatchPlan p = plan(manifest, s.rows, s.capacity, s.splicing);
  const auto examples = examples_from_stream(iterate(p, manifest));
  check_widths(examples, config.model);

  std::filesystem::create_directories(o.out);
  const auto dir = std::filesystem::path(o.out);
  ContextualTransducer model(config);
  Trainer trainer(model, config.training.learning_rate);
  std::ofstream losses(dir / "loss.txt");
  if (!losses) fail(ErrorKind::kIo, "cannot write '" + (dir / "loss.txt").string() + "'");
  losses << std::setprecision(17);
  double first = 0.0;
  double last = 0.0;
  for (int step = 0; step < config.training.steps; ++step) {
    last = trainer.step(examples);
    if (step == 0) first = last;
    losses << step << '\t' << last << '\n';
  }
  losses.flush();
  save_checkpoint(model.params(), (dir / "model.ckpt").string());
  write_file((dir / "config.ini").string(), serialize_config(config));
  out << "utterances " << examples.size() << ", plan steps " << p.step_count() << ", utilization "
      << percent(utilization(p)) << "\n";
  out << "steps " << config.training.steps << ", initial loss " << fixed(first, 6)
      << ", final loss " << fixed(last, 6) << "\n";
  out << "wrote " << (dir / "model.ckpt").string() << ", " << (dir / "loss.txt").string() << ", "
      << (dir / "config.ini").string() << "\n";
  return 0;
}

int run_decode(const DecodeOptions& o, std::ostream& out) {
  const std::string config_path =
      o.config ? *o.config
               : (std::filesystem::path(o.checkpoint).parent_path() / "config.ini").string();
  const RunConfig config = config_or_default(config_path);
  const Manifest manifest = load_manifest(o.manifest);
  ContextualTransducer model(config);
  load_checkpoint(model.params(), o.checkpoint);
  const auto examples = manifest_examples(manifest);
  check_widths(examples, config.model);
  const DecodeReport report = decode_examples(model, examples);

  std::ostringstream os;
  for (const auto& h : report.hypotheses) {
    os << h.conversation << '\t' << h.utterance_id << "\thyp=" << join(h.tokens)
       << "\tref=" << join(h.reference) << "\terrors=" << h.errors << '\n';
  }
  if (!report.hypotheses.empty()) {
    os << "TER " << fixed(report.token_error_rate(), 4) << " (" << report.errors << "/"
       << report.reference_tokens << ")\n";
  }
  out << os.str();
  if (o.out) write_file(*o.out, os.str());
  return 0;
}

int run_mask_dump(const MaskDumpOptions& o, std::ostream& out) {
  // Reuse the config parser for the mask keys so both surfaces agree.
  std::ostringstream ini;
  if (o.config) {
    std::ifstream in(*o.config);
    if (!in) fail(ErrorKind::kIo, "cannot open config '" + *o.config + "'");
    ini << in.rdbuf() << '\n';
  }
  ini << "[mask]\n";
  if (o.mode) ini << "mode = " << *o.mode << '\n';
  if (o.chunk) ini << "chunk_size = " << *o.chunk << '\n';
  if (o.lookahead) ini << "lookahead = " << *o.lookahead << '\n';
  if (o.left_cap) ini << "left_context_cap = " << *o.left_cap << '\n';
  std::istringstream in(ini.str());
  MaskSpec spec = parse_config(in).mask;
  spec.prev_utterance_lengths = o.prev;
  if (o.prev_cap_kind) {
    if (*o.prev_cap_kind == "unlimited") {
      spec.prev_cap_kind = PrevCapKind::kUnlimited;
    } else if (*o.prev_cap_kind == "frames") {
      spec.prev_cap_kind = PrevCapKind::kFrames;
    } else if (*o.prev_cap_kind == "utterances") {
      spec.prev_cap_kind = PrevCapKind::kUtterances;
    } else {
      fail(ErrorKind::kSpec, "unknown prev cap kind '" + *o.prev_cap_kind + "'");
    }
  }
  if (o.prev_cap) spec.prev_cap = *o.prev_cap;
  spec.validate();
  const AttentionMask current = build_current_mask(spec, o.frames);
  const AttentionMask mask =
      spec.prev_utterance_lengths.empty() ? current
                                          : compose(build_prev_mask(spec, o.frames), current);
  const std::string text = render_mask(mask);
  out << text;
  if (o.out) write_file(*o.out, text);
  return 0;
}

RunConfig gradcheck_config() {
  RunConfig c;
  c.model.input_dim = 8;
  c.model.blocks = 2;
  c.model.d_model = 8;
  c.model.heads = 2;
  c.model.ffn_ratio = 4;
  c.model.conv_kernel = 3;
  c.model.subsample_channels = 2;
  c.model.predictor_embed = 4;
  c.model.predictor_hidden = 6;
  c.model.joint_dim = 6;
  c.model.vocab = 4;
  c.fusion.method = FusionMethod::kEmbedConcat;
  return c;
}

int run_gradcheck(const GradcheckOptions& o, std::ostream& out) {
  RunConfig config = o.config ? config_or_default(o.config) : gradcheck_config();
  config.training.seed = o.seed;
  ContextualTransducer model(config);

  ToyCorpusOptions corpus_options;
  corpus_options.conversations = 1;
  corpus_options.utterances = 2;
  corpus_options.min_tokens = 2;
  corpus_options.max_tokens = 2;
  corpus_options.frames_per_token = 4;
  corpus_options.input_dim = config.model.input_dim;
  corpus_options.vocab = config.model.vocab;
  corpus_options.seed = o.seed;
  const ToyCorpus corpus = make_toy_corpus(corpus_options);
  const auto& utts = corpus.manifest.conversations.front().utterances;
  const Tensor x0 = corpus.features.at(utts[0].feature_path);
  const Tensor x1 = corpus.features.at(utts[1].feature_path);

  std::vector<CachedUtterance> history;
  {
    Tape tape(false);
    auto enc = model.encode(tape, x0, {}, true);
    history.push_back(model.cache_entry(utts[0].utterance_id, x0, enc));
  }
  const auto result = check_parameter_gradients(
      model.params(),
      [&](Tape& tape) {
        auto enc = model.encode(tape, x1, history, true);
        return model.loss(enc.current, utts[1].labels);
      },
      kGradcheckStep, kGradcheckFloor);
  const bool ok = result.max_relative_error < kGradcheckTolerance;
  out << "fusion " << to_string(config.fusion.method) << ", " << result.entries
      << " trainable entries\n";
  out << "max relative error " << result.max_relative_error << " at " << result.worst_entry
      << " (floor " << kGradcheckFloor << ", step " << kGradcheckStep << ")\n";
  out << "max absolute error " << result.max_absolute_error << "\n";
  out << (ok ? "PASS" : "FAIL") << " (tolerance " << kGradcheckTolerance << ")\n";
  return ok ? 0 : 1;
}

int run_synth(const SynthOptions& o, std::ostream& out) {
  ToyCorpusOptions options;
  options.conversations = o.conversations;
  options.utterances = o.utterances;
  options.input_dim = o.input_dim;
  options.vocab = o.vocab;
  options.seed = o.seed;
  const ToyCorpus corpus = make_toy_corpus(options);
  const std::string manifest = write_toy_corpus(corpus, o.out);

  RunConfig config = toy_training_config();
  config.model.input_dim = o.input_dim;
  config.model.vocab = o.vocab;
  config.training.seed = o.seed;
  const std::string config_path = (std::filesystem::path(o.out) / "config.ini").string();
  write_file(config_path, serialize_config(config));
  out << "wrote " << manifest << " (" << corpus.manifest.utterance_count() << " utterances) and "
      << config_path << "\n";
  return 0;
}

}  // namespace cuctx::cli

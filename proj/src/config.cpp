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

#include "cuctx/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cuctx/error.hpp"

namespace cuctx {

namespace pt = boost::property_tree;

const char* to_string(FusionMethod m) {
  switch (m) {
    case FusionMethod::kNone: return "none";
    case FusionMethod::kInputConcat: return "input_concat";
    case FusionMethod::kEmbedConcat: return "embed_concat";
    case FusionMethod::kPooling: return "pooling";
    case FusionMethod::kChunked: return "chunked";
  }
  return "none";
}

FusionMethod parse_fusion_method(const std::string& s) {
  for (auto m : {FusionMethod::kNone, FusionMethod::kInputConcat, FusionMethod::kEmbedConcat,
                 FusionMethod::kPooling, FusionMethod::kChunked}) {
    if (s == to_string(m)) return m;
  }
  fail(ErrorKind::kConfig, "unknown fusion method: " + s);
}

ModelConfig ModelConfig::full_scale() {
  ModelConfig c;
  c.input_dim = 80;
  c.blocks = 12;
  c.d_model = 512;
  c.heads = 8;
  c.ffn_ratio = 4;
  c.conv_kernel = 15;
  c.subsample_channels = 512;
  c.predictor_embed = 300;
  c.predictor_hidden = 300;
  c.joint_dim = 512;
  c.vocab = 5000;
  return c;
}

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) fail(ErrorKind::kConfig, std::string("model.") + name + " must be >= 1");
  };
  positive(input_dim, "input_dim");
  positive(blocks, "blocks");
  positive(d_model, "d_model");
  positive(heads, "heads");
  positive(ffn_ratio, "ffn_ratio");
  positive(conv_kernel, "conv_kernel");
  positive(subsample_channels, "subsample_channels");
  positive(predictor_embed, "predictor_embed");
  positive(predictor_hidden, "predictor_hidden");
  positive(joint_dim, "joint_dim");
  positive(vocab, "vocab");
  if (d_model % heads != 0) {
    fail(ErrorKind::kConfig, "model.d_model " + std::to_string(d_model) +
                                 " is not divisible by model.heads " + std::to_string(heads));
  }
  if (conv_kernel % 2 == 0) fail(ErrorKind::kConfig, "model.conv_kernel must be odd");
}

void RunConfig::validate() const {
  model.validate();
  mask.validate();
  if (fusion.context_utterances < 0) fail(ErrorKind::kConfig, "fusion.context_utterances < 0");
  if (fusion.context_frames && *fusion.context_frames < 0) {
    fail(ErrorKind::kConfig, "fusion.context_frames < 0");
  }
  if (fusion.pooling_rows < 1) fail(ErrorKind::kConfig, "fusion.pooling_rows must be >= 1");
  if (fusion.method == FusionMethod::kChunked && mask.mode != MaskMode::kStreaming &&
      !fusion.allow_non_streaming) {
    fail(ErrorKind::kConfig,
         "fusion.method = chunked needs mask.mode = streaming (or fusion.allow_non_streaming = true)");
  }
  if (scheduler.rows < 1) fail(ErrorKind::kConfig, "scheduler.rows must be >= 1");
  if (scheduler.capacity < 1) fail(ErrorKind::kConfig, "scheduler.capacity must be >= 1");
  if (scheduler.max_steps < 0) fail(ErrorKind::kConfig, "scheduler.max_steps must be >= 0");
  if (!(training.learning_rate > 0.0)) fail(ErrorKind::kConfig, "training.learning_rate must be > 0");
  if (training.steps < 0) fail(ErrorKind::kConfig, "training.steps must be >= 0");
}

bool operator==(const MaskSpec& a, const MaskSpec& b) {
  return a.mode == b.mode && a.chunk_size == b.chunk_size && a.lookahead == b.lookahead &&
         a.left_context_cap == b.left_context_cap && a.prev_cap_kind == b.prev_cap_kind &&
         a.prev_cap == b.prev_cap && a.prev_utterance_lengths == b.prev_utterance_lengths;
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  return a.model == b.model && a.fusion == b.fusion && a.mask == b.mask &&
         a.scheduler == b.scheduler && a.training == b.training;
}

namespace {

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (v.empty() || v[0] == '-') throw std::invalid_argument(v);
    const auto out = static_cast<std::uint64_t>(std::stoull(v, &used));
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    fail(ErrorKind::kConfig, key + ": expected a non-negative integer, got '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const int out = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    fail(ErrorKind::kConfig, key + ": expected an integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    fail(ErrorKind::kConfig, key + ": expected a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(ErrorKind::kConfig, key + ": expected true/false, got '" + v + "'");
}

std::optional<int> to_optional_int(const std::string& key, const std::string& v) {
  if (v == "unlimited" || v == "none") return std::nullopt;
  return to_int(key, v);
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"model.input_dim", [](RunConfig& c, auto& k, auto& v) { c.model.input_dim = to_int(k, v); }},
      {"model.blocks", [](RunConfig& c, auto& k, auto& v) { c.model.blocks = to_int(k, v); }},
      {"model.d_model", [](RunConfig& c, auto& k, auto& v) { c.model.d_model = to_int(k, v); }},
      {"model.heads", [](RunConfig& c, auto& k, auto& v) { c.model.heads = to_int(k, v); }},
      {"model.ffn_ratio", [](RunConfig& c, auto& k, auto& v) { c.model.ffn_ratio = to_int(k, v); }},
      {"model.conv_kernel",
       [](RunConfig& c, auto& k, auto& v) { c.model.conv_kernel = to_int(k, v); }},
      {"model.subsample_channels",
       [](RunConfig& c, auto& k, auto& v) { c.model.subsample_channels = to_int(k, v); }},
      {"model.predictor_embed",
       [](RunConfig& c, auto& k, auto& v) { c.model.predictor_embed = to_int(k, v); }},
      {"model.predictor_hidden",
       [](RunConfig& c, auto& k, auto& v) { c.model.predictor_hidden = to_int(k, v); }},
      {"model.joint_dim", [](RunConfig& c, auto& k, auto& v) { c.model.joint_dim = to_int(k, v); }},
      {"model.vocab", [](RunConfig& c, auto& k, auto& v) { c.model.vocab = to_int(k, v); }},
      {"fusion.method",
       [](RunConfig& c, auto&, auto& v) { c.fusion.method = parse_fusion_method(v); }},
      {"fusion.context_utterances",
       [](RunConfig& c, auto& k, auto& v) { c.fusion.context_utterances = to_int(k, v); }},
      {"fusion.context_frames",
       [](RunConfig& c, auto& k, auto& v) { c.fusion.context_frames = to_optional_int(k, v); }},
      {"fusion.pooling_rows",
       [](RunConfig& c, auto& k, auto& v) { c.fusion.pooling_rows = to_int(k, v); }},
      {"fusion.allow_non_streaming",
       [](RunConfig& c, auto& k, auto& v) { c.fusion.allow_non_streaming = to_bool(k, v); }},
      {"mask.mode",
       [](RunConfig& c, auto& k, auto& v) {
         if (v == "streaming") {
           c.mask.mode = MaskMode::kStreaming;
         } else if (v == "non_streaming") {
           c.mask.mode = MaskMode::kNonStreaming;
         } else {
           fail(ErrorKind::kConfig, k + ": expected streaming or non_streaming, got '" + v + "'");
         }
       }},
      {"mask.chunk_size", [](RunConfig& c, auto& k, auto& v) { c.mask.chunk_size = to_int(k, v); }},
      {"mask.lookahead",
       [](RunConfig& c, auto& k, auto& v) {
         c.mask.lookahead = to_optional_int(k, v).value_or(kUnlimitedLookahead);
       }},
      {"mask.left_context_cap",
       [](RunConfig& c, auto& k, auto& v) { c.mask.left_context_cap = to_optional_int(k, v); }},
      {"scheduler.rows", [](RunConfig& c, auto& k, auto& v) { c.scheduler.rows = to_int(k, v); }},
      {"scheduler.capacity",
       [](RunConfig& c, auto& k, auto& v) { c.scheduler.capacity = to_int(k, v); }},
      {"scheduler.splicing",
       [](RunConfig& c, auto& k, auto& v) { c.scheduler.splicing = to_bool(k, v); }},
      {"scheduler.max_steps",
       [](RunConfig& c, auto& k, auto& v) { c.scheduler.max_steps = to_int(k, v); }},
      {"training.learning_rate",
       [](RunConfig& c, auto& k, auto& v) { c.training.learning_rate = to_double(k, v); }},
      {"training.steps", [](RunConfig& c, auto& k, auto& v) { c.training.steps = to_int(k, v); }},
      {"training.seed",
       [](RunConfig& c, auto& k, auto& v) {
         c.training.seed = to_u64(k, v);
       }},
  };
  return table;
}

std::string optional_text(const std::optional<int>& v) {
  return v ? std::to_string(*v) : std::string("unlimited");
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorKind::kConfig, std::string("config parse error at line ") +
                                 std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig config;
  for (const auto& [section, entries] : tree) {
    if (entries.empty()) {
      fail(ErrorKind::kConfig, "config key outside a section: " + section);
    }
    for (const auto& [key, value] : entries) {
      const std::string full = section + "." + key;
      auto it = setters().find(full);
      if (it == setters().end()) fail(ErrorKind::kConfig, "unknown config key: " + full);
      it->second(config, full, value.get_value<std::string>());
    }
  }
  config.validate();
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open config: " + path);
  return parse_config(in);
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream os;
  os << "[model]\n"
     << "input_dim = " << c.model.input_dim << '\n'
     << "blocks = " << c.model.blocks << '\n'
     << "d_model = " << c.model.d_model << '\n'
     << "heads = " << c.model.heads << '\n'
     << "ffn_ratio = " << c.model.ffn_ratio << '\n'
     << "conv_kernel = " << c.model.conv_kernel << '\n'
     << "subsample_channels = " << c.model.subsample_channels << '\n'
     << "predictor_embed = " << c.model.predictor_embed << '\n'
     << "predictor_hidden = " << c.model.predictor_hidden << '\n'
     << "joint_dim = " << c.model.joint_dim << '\n'
     << "vocab = " << c.model.vocab << "\n\n";
  os << "[fusion]\n"
     << "method = " << to_string(c.fusion.method) << '\n'
     << "context_utterances = " << c.fusion.context_utterances << '\n'
     << "context_frames = " << optional_text(c.fusion.context_frames) << '\n'
     << "pooling_rows = " << c.fusion.pooling_rows << '\n'
     << "allow_non_streaming = " << (c.fusion.allow_non_streaming ? "true" : "false") << "\n\n";
  os << "[mask]\n"
     << "mode = " << (c.mask.mode == MaskMode::kStreaming ? "streaming" : "non_streaming") << '\n'
     << "chunk_size = " << c.mask.chunk_size << '\n'
     << "lookahead = "
     << (c.mask.lookahead >= kUnlimitedLookahead ? std::string("unlimited")
                                                 : std::to_string(c.mask.lookahead))
     << '\n'
     << "left_context_cap = " << optional_text(c.mask.left_context_cap) << "\n\n";
  os << "[scheduler]\n"
     << "rows = " << c.scheduler.rows << '\n'
     << "capacity = " << c.scheduler.capacity << '\n'
     << "splicing = " << (c.scheduler.splicing ? "true" : "false") << '\n'
     << "max_steps = " << c.scheduler.max_steps << "\n\n";
  os << "[training]\n"
     << "learning_rate = " << format_double(c.training.learning_rate) << '\n'
     << "steps = " << c.training.steps << '\n'
     << "seed = " << c.training.seed << '\n';
  return os.str();
}

}  // namespace cuctx

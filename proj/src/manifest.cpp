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

#include "cuctx/manifest.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "cuctx/error.hpp"

namespace cuctx {

static_assert(std::endian::native == std::endian::little, "feature files assume a little-endian host");

int Conversation::total_frames() const {
  int n = 0;
  for (const auto& u : utterances) n += u.frame_count;
  return n;
}

int Manifest::total_frames() const {
  int n = 0;
  for (const auto& c : conversations) n += c.total_frames();
  return n;
}

std::size_t Manifest::utterance_count() const {
  std::size_t n = 0;
  for (const auto& c : conversations) n += c.utterances.size();
  return n;
}

namespace {

[[noreturn]] void bad_line(int line, const std::string& msg) {
  fail(ErrorKind::kManifest, "line " + std::to_string(line) + ": " + msg);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_int(const std::string& s, int& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

Manifest parse_manifest(std::istream& in, const std::string& base_dir) {
  Manifest m;
  std::set<std::string> finished;
  std::set<std::string> utterance_ids;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty() || text[0] == '#') continue;
    auto fields = split(text, '\t');
    if (fields.size() != 5) {
      bad_line(line, "expected 5 tab-separated fields, got " + std::to_string(fields.size()));
    }
    const std::string& conv = fields[0];
    ManifestUtterance u;
    u.utterance_id = fields[1];
    u.line = line;
    if (conv.empty()) bad_line(line, "empty conversation id");
    if (u.utterance_id.empty()) bad_line(line, "empty utterance id");
    if (!parse_int(fields[2], u.frame_count)) bad_line(line, "bad frame_count '" + fields[2] + "'");
    if (u.frame_count < 1) bad_line(line, "frame_count must be >= 1");
    u.feature_path = fields[3];
    if (!u.feature_path.empty() && !base_dir.empty() &&
        std::filesystem::path(u.feature_path).is_relative()) {
      u.feature_path = (std::filesystem::path(base_dir) / u.feature_path).string();
    }
    if (!fields[4].empty()) {
      for (const auto& tok : split(fields[4], ',')) {
        int id = 0;
        if (!parse_int(tok, id)) bad_line(line, "bad label id '" + tok + "'");
        u.labels.push_back(id);
      }
    }
    if (!utterance_ids.insert(conv + "\t" + u.utterance_id).second) {
      bad_line(line, "duplicate utterance '" + u.utterance_id + "' in conversation '" + conv + "'");
    }
    if (m.conversations.empty() || m.conversations.back().id != conv) {
      if (finished.count(conv)) {
        bad_line(line, "out-of-order manifest: conversation '" + conv +
                           "' resumes after other conversations");
      }
      if (!m.conversations.empty()) finished.insert(m.conversations.back().id);
      m.conversations.push_back({conv, {}});
    }
    m.conversations.back().utterances.push_back(std::move(u));
  }
  return m;
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open manifest '" + path + "'");
  return parse_manifest(in, std::filesystem::path(path).parent_path().string());
}

void write_manifest(const Manifest& manifest, std::ostream& out) {
  for (const auto& c : manifest.conversations) {
    for (const auto& u : c.utterances) {
      out << c.id << '\t' << u.utterance_id << '\t' << u.frame_count << '\t' << u.feature_path
          << '\t';
      for (std::size_t i = 0; i < u.labels.size(); ++i) out << (i ? "," : "") << u.labels[i];
      out << '\n';
    }
  }
}

Tensor read_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open feature file '" + path + "'");
  std::uint32_t header[2] = {0, 0};
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in) fail(ErrorKind::kIo, "truncated feature header in '" + path + "'");
  const auto t = static_cast<int>(header[0]);
  const auto d = static_cast<int>(header[1]);
  std::vector<float> raw(static_cast<std::size_t>(header[0]) * header[1]);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (!in) fail(ErrorKind::kIo, "truncated feature data in '" + path + "'");
  Tensor x = Tensor::zeros({t, d});
  for (std::size_t i = 0; i < raw.size(); ++i) x[i] = static_cast<double>(raw[i]);
  return x;
}

void write_features(const Tensor& features, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write feature file '" + path + "'");
  const std::uint32_t header[2] = {static_cast<std::uint32_t>(features.rows()),
                                   static_cast<std::uint32_t>(features.cols())};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  for (double v : features.data()) {
    const float f = static_cast<float>(v);
    out.write(reinterpret_cast<const char*>(&f), sizeof(f));
  }
  if (!out) fail(ErrorKind::kIo, "failed writing '" + path + "'");
}

}  // namespace cuctx

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

#include <iosfwd>
#include <string>
#include <vector>

#include "cuctx/tensor.hpp"

namespace cuctx {

struct ManifestUtterance {
  std::string utterance_id;
  int frame_count = 0;
  std::string feature_path;
  std::vector<int> labels;
  int line = 0;  // source line, 0 when built in memory
};

struct Conversation {
  std::string id;
  std::vector<ManifestUtterance> utterances;  // temporal order

  int total_frames() const;
};

struct Manifest {
  std::vector<Conversation> conversations;

  int total_frames() const;
  std::size_t utterance_count() const;
  bool empty() const { return conversations.empty(); }
};

// Tab-separated lines: conversation_id, utterance_id, frame_count,
// feature_path, comma-separated label ids. Blank lines and lines starting
// with '#' are skipped. A conversation's lines must be contiguous. Relative
// feature paths resolve against `base_dir` when it is non-empty.
Manifest parse_manifest(std::istream& in, const std::string& base_dir = "");
Manifest load_manifest(const std::string& path);
void write_manifest(const Manifest& manifest, std::ostream& out);

// Feature file: uint32 LE frame count T, uint32 LE width D, then T*D float32 LE.
Tensor read_features(const std::string& path);
void write_features(const Tensor& features, const std::string& path);

}  // namespace cuctx

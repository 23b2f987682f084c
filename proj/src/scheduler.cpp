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

#include "cuctx/scheduler.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "cuctx/error.hpp"

namespace cuctx {

int RowStep::filled() const {
  int n = 0;
  for (const auto& s : segments) n += s.frames;
  return n;
}

int BatchPlan::filled_frames() const {
  int n = 0;
  for (const auto& step : steps) {
    for (const auto& rs : step) n += rs.filled();
  }
  return n;
}

BatchPlan plan(const Manifest& manifest, int rows, int capacity, bool splicing, int max_steps) {
  if (rows < 1) fail(ErrorKind::kConfig, "rows must be >= 1");
  if (capacity < 1) fail(ErrorKind::kConfig, "capacity must be >= 1");
  if (max_steps < 0) fail(ErrorKind::kConfig, "max_steps must be >= 0");
  for (const auto& c : manifest.conversations) {
    for (const auto& u : c.utterances) {
      if (u.frame_count > capacity) {
        fail(ErrorKind::kCapacity, "utterance '" + u.utterance_id + "' of conversation '" + c.id +
                                       "' has " + std::to_string(u.frame_count) +
                                       " frames, capacity is " + std::to_string(capacity));
      }
    }
  }

  BatchPlan p;
  p.rows = rows;
  p.capacity = capacity;
  p.splicing = splicing;
  p.assignment.assign(static_cast<std::size_t>(rows), {});

  const int n = static_cast<int>(manifest.conversations.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return manifest.conversations[static_cast<std::size_t>(a)].total_frames() >
           manifest.conversations[static_cast<std::size_t>(b)].total_frames();
  });
  std::vector<long> load(static_cast<std::size_t>(rows), 0);
  for (int c : order) {
    auto row = static_cast<std::size_t>(std::min_element(load.begin(), load.end()) - load.begin());
    p.assignment[row].push_back(c);
    load[row] += manifest.conversations[static_cast<std::size_t>(c)].total_frames();
  }

  std::vector<std::vector<RowStep>> per_row(static_cast<std::size_t>(rows));
  for (std::size_t r = 0; r < per_row.size(); ++r) {
    auto& out = per_row[r];
    for (int c : p.assignment[r]) {
      const auto& conv = manifest.conversations[static_cast<std::size_t>(c)];
      for (std::size_t u = 0; u < conv.utterances.size(); ++u) {
        const int f = conv.utterances[u].frame_count;
        if (out.empty() || !splicing || out.back().filled() + f > capacity) out.emplace_back();
        out.back().segments.push_back({c, static_cast<int>(u), f, u == 0});
      }
    }
  }

  std::size_t steps = 0;
  for (const auto& r : per_row) steps = std::max(steps, r.size());
  if (max_steps > 0) steps = std::min(steps, static_cast<std::size_t>(max_steps));
  p.steps.assign(steps, std::vector<RowStep>(static_cast<std::size_t>(rows)));
  for (std::size_t s = 0; s < steps; ++s) {
    for (std::size_t r = 0; r < per_row.size(); ++r) {
      RowStep rs = s < per_row[r].size() ? per_row[r][s] : RowStep{};
      rs.padding = capacity - rs.filled();
      p.steps[s][r] = std::move(rs);
    }
  }
  return p;
}

double utilization(const BatchPlan& plan) {
  if (plan.steps.empty()) return 1.0;
  const double slots = static_cast<double>(plan.rows) * plan.capacity * plan.step_count();
  return plan.filled_frames() / slots;
}

std::string export_plan(const BatchPlan& plan, const Manifest& manifest) {
  std::ostringstream os;
  os << "plan rows=" << plan.rows << " capacity=" << plan.capacity
     << " splicing=" << (plan.splicing ? "true" : "false") << " steps=" << plan.step_count()
     << " filled=" << plan.filled_frames() << '\n';
  for (std::size_t r = 0; r < plan.assignment.size(); ++r) {
    os << "row " << r << " conversations";
    for (int c : plan.assignment[r]) os << ' ' << manifest.conversations[static_cast<std::size_t>(c)].id;
    os << '\n';
  }
  for (std::size_t s = 0; s < plan.steps.size(); ++s) {
    for (std::size_t r = 0; r < plan.steps[s].size(); ++r) {
      const RowStep& rs = plan.steps[s][r];
      os << "step " << s << " row " << r << ':';
      for (const Segment& seg : rs.segments) {
        const auto& conv = manifest.conversations[static_cast<std::size_t>(seg.conversation)];
        os << ' ' << conv.id << '/' << conv.utterances[static_cast<std::size_t>(seg.utterance)].utterance_id
           << '[' << seg.frames << ']' << (seg.context_reset ? "*" : "");
      }
      os << " pad=" << rs.padding << '\n';
    }
  }
  return os.str();
}

std::string render_plan(const BatchPlan& plan, const Manifest& manifest) {
  static const std::string kLetters = "ABCDEFGHIJKLMNOPQRSTUVWXYZ";
  auto letter = [&](int conv, int utt) {
    char c = kLetters[static_cast<std::size_t>(conv) % kLetters.size()];
    return utt % 2 ? static_cast<char>(c - 'A' + 'a') : c;
  };
  std::ostringstream os;
  os << "legend:";
  for (std::size_t c = 0; c < manifest.conversations.size(); ++c) {
    os << ' ' << letter(static_cast<int>(c), 0) << '=' << manifest.conversations[c].id;
  }
  os << '\n';
  for (int r = 0; r < plan.rows; ++r) {
    os << "row " << r << " |";
    for (const auto& step : plan.steps) {
      const RowStep& rs = step[static_cast<std::size_t>(r)];
      for (const Segment& seg : rs.segments) {
        os << std::string(static_cast<std::size_t>(seg.frames), letter(seg.conversation, seg.utterance));
      }
      os << std::string(static_cast<std::size_t>(rs.padding), '.') << '|';
    }
    os << '\n';
  }
  return os.str();
}

Tensor load_utterance_features(const ManifestUtterance& utterance) {
  Tensor x = read_features(utterance.feature_path);
  if (x.rows() != utterance.frame_count) {
    fail(ErrorKind::kManifest, "line " + std::to_string(utterance.line) + ": utterance '" +
                                   utterance.utterance_id + "' lists " +
                                   std::to_string(utterance.frame_count) + " frames, feature file has " +
                                   std::to_string(x.rows()));
  }
  return x;
}

std::vector<StreamItem> iterate(const BatchPlan& plan, const Manifest& manifest,
                                const FeatureLoader& loader) {
  std::vector<StreamItem> out;
  for (std::size_t s = 0; s < plan.steps.size(); ++s) {
    for (std::size_t r = 0; r < plan.steps[s].size(); ++r) {
      for (const Segment& seg : plan.steps[s][r].segments) {
        StreamItem item;
        item.step = static_cast<int>(s);
        item.row = static_cast<int>(r);
        item.segment = seg;
        item.directive = seg.context_reset ? CacheDirective::kReset : CacheDirective::kCarry;
        item.conversation = &manifest.conversations.at(static_cast<std::size_t>(seg.conversation));
        item.utterance = &item.conversation->utterances.at(static_cast<std::size_t>(seg.utterance));
        if (loader) item.features = loader(*item.utterance);
        out.push_back(std::move(item));
      }
    }
  }
  return out;
}

}  // namespace cuctx

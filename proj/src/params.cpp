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

#include "cuctx/params.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cuctx/error.hpp"

namespace cuctx {

namespace {

constexpr const char* kMagic = "cuctx-checkpoint 1";

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

std::string join_shape(const std::vector<int>& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(shape[i]);
  }
  return s;
}

std::vector<int> parse_shape(const std::string& text) {
  std::vector<int> shape;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) shape.push_back(std::stoi(item));
  return shape;
}

}  // namespace

Parameter& ParameterStore::add(const std::string& name, Tensor init, bool trainable) {
  if (find(name)) fail(ErrorKind::kConfig, "duplicate parameter name: " + name);
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->grad = Tensor::zeros(init.shape());
  p->value = std::move(init);
  p->trainable = trainable;
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter* ParameterStore::find(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

const Parameter* ParameterStore::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

std::vector<Parameter*> ParameterStore::all() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterStore::all() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<Parameter*> ParameterStore::trainable() {
  std::vector<Parameter*> out;
  for (auto& p : params_)
    if (p->trainable) out.push_back(p.get());
  return out;
}

std::size_t ParameterStore::trainable_count() const {
  std::size_t n = 0;
  for (const auto& p : params_)
    if (p->trainable) n += p->value.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_)
    for (double& g : p->grad.data()) g = 0.0;
}

void save_checkpoint(const ParameterStore& store, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot open checkpoint for writing: " + path);
  const auto params = store.all();
  std::ostringstream index;
  index << kMagic << '\n' << "arrays " << params.size() << '\n';
  std::size_t offset = 0;
  for (const Parameter* p : params) {
    index << p->name << '\t' << join_shape(p->value.shape()) << '\t' << offset << '\t'
          << p->value.size() << '\n';
    offset += p->value.size() * sizeof(double);
  }
  index << "data " << offset << '\n';
  out << index.str();
  for (const Parameter* p : params) {
    out.write(reinterpret_cast<const char*>(p->value.data().data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  if (!out) fail(ErrorKind::kIo, "short write on checkpoint: " + path);
}

std::vector<CheckpointEntry> read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open checkpoint: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    fail(ErrorKind::kIo, "not a checkpoint file: " + path);
  }
  std::size_t count = 0;
  {
    std::getline(in, line);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag >> count) || tag != "arrays") fail(ErrorKind::kIo, "bad checkpoint index");
  }
  struct IndexLine {
    std::string name;
    std::vector<int> shape;
    std::size_t offset;
    std::size_t elements;
  };
  std::vector<IndexLine> lines;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) fail(ErrorKind::kIo, "truncated checkpoint index");
    std::istringstream ls(line);
    IndexLine e;
    std::string shape;
    if (!std::getline(ls, e.name, '\t') || !std::getline(ls, shape, '\t') ||
        !(ls >> e.offset >> e.elements)) {
      fail(ErrorKind::kIo, "bad checkpoint index line: " + line);
    }
    e.shape = parse_shape(shape);
    lines.push_back(std::move(e));
  }
  std::size_t total = 0;
  {
    std::getline(in, line);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag >> total) || tag != "data") fail(ErrorKind::kIo, "bad checkpoint data tag");
  }
  std::vector<char> blob(total);
  in.read(blob.data(), static_cast<std::streamsize>(total));
  if (static_cast<std::size_t>(in.gcount()) != total) {
    fail(ErrorKind::kIo, "truncated checkpoint payload: " + path);
  }
  std::vector<CheckpointEntry> entries;
  for (auto& e : lines) {
    if (e.offset + e.elements * sizeof(double) > total) {
      fail(ErrorKind::kIo, "checkpoint entry out of range: " + e.name);
    }
    std::vector<double> data(e.elements);
    std::memcpy(data.data(), blob.data() + e.offset, e.elements * sizeof(double));
    entries.push_back({e.name, Tensor(e.shape, std::move(data))});
  }
  return entries;
}

void load_checkpoint(ParameterStore& store, const std::string& path) {
  auto entries = read_checkpoint(path);
  if (entries.size() != store.all().size()) {
    fail(ErrorKind::kConfig, "checkpoint holds " + std::to_string(entries.size()) +
                                 " arrays, model expects " +
                                 std::to_string(store.all().size()));
  }
  for (auto& e : entries) {
    Parameter* p = store.find(e.name);
    if (!p) fail(ErrorKind::kConfig, "checkpoint array not in model: " + e.name);
    if (!p->value.same_shape(e.value)) {
      fail(ErrorKind::kConfig, "checkpoint array " + e.name + " has shape " +
                                   e.value.shape_string() + ", model expects " +
                                   p->value.shape_string());
    }
    p->value = std::move(e.value);
  }
}

}  // namespace cuctx

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

#include <gtest/gtest.h>

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cuctx/cli.hpp"
#include "cuctx/error.hpp"
#include "cuctx/synth.hpp"
#include "support.hpp"

namespace cuctx {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("cuctx_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
    return path(name);
  }

  std::string toy_corpus(int conversations, int utterances) const {
    ToyCorpusOptions o;
    o.conversations = conversations;
    o.utterances = utterances;
    return write_toy_corpus(make_toy_corpus(o), path("corpus"));
  }

  std::string config_file(const std::string& name, RunConfig c) const {
    return write(name, serialize_config(c));
  }

  fs::path dir_;
};

TEST_F(CliTest, ConfigRoundTrip) {
  RunConfig c = toy_training_config();
  c.fusion.method = FusionMethod::kChunked;
  c.fusion.context_frames = 40;
  c.mask.mode = MaskMode::kStreaming;
  c.mask.chunk_size = 3;
  c.mask.lookahead = 6;
  c.mask.left_context_cap = 9;
  c.scheduler.splicing = false;
  c.scheduler.max_steps = 4;
  c.training.learning_rate = 0.1 + 0.2;
  c.training.seed = 0xFFFFFFFFFFFFull;
  std::istringstream once(serialize_config(c));
  RunConfig back = parse_config(once);
  EXPECT_TRUE(back == c);
  EXPECT_EQ(serialize_config(back), serialize_config(c));
  EXPECT_TRUE(load_config(config_file("c.ini", c)) == c);
}

TEST_F(CliTest, FullScalePresetIsValid) {
  const ModelConfig c = ModelConfig::full_scale();
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.blocks, 12);
  EXPECT_EQ(c.d_model, 512);
  EXPECT_EQ(c.heads, 8);
  EXPECT_EQ(c.d_model % c.heads, 0);
}

TEST_F(CliTest, ConfigErrors) {
  const std::vector<std::string> bad = {
      "[model]\nunknown_key = 1\n",
      "[model]\nheads = 3\nd_model = 64\n",
      "[model]\nblocks = many\n",
      "[fusion]\nmethod = telepathy\n",
      "[fusion]\nmethod = chunked\n",
      "[mask]\nmode = streaming\nchunk_size = 0\n",
      "[scheduler]\ncapacity = -1\n",
  };
  for (const auto& text : bad) {
    std::istringstream in(text);
    try {
      parse_config(in);
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_TRUE(e.kind() == ErrorKind::kConfig || e.kind() == ErrorKind::kSpec) << text;
    }
  }
  std::istringstream ok("[fusion]\nmethod = chunked\nallow_non_streaming = true\n");
  EXPECT_EQ(parse_config(ok).fusion.method, FusionMethod::kChunked);
}

TEST_F(CliTest, PlanReportOnReferenceData) {
  cli::PlanOptions o;
  o.manifest = std::string(CUCTX_DATA_DIR) + "/reference_plan.tsv";
  o.config = std::string(CUCTX_DATA_DIR) + "/reference_plan.ini";
  o.out = path("plan.txt");
  std::ostringstream out;
  EXPECT_EQ(cli::run_plan(o, out), 0);
  const std::string text = out.str();
  EXPECT_NE(text.find("5 steps, 67/105 frames filled, utilization 63.8%"), std::string::npos) << text;
  EXPECT_NE(text.find("5 steps, 95/105 frames filled, utilization 90.4%"), std::string::npos) << text;
  EXPECT_NE(text.find("delta: +26.6 pp"), std::string::npos) << text;
  EXPECT_NE(slurp(path("plan.txt")).find("splicing=true steps=5 filled=95"), std::string::npos);
}

TEST_F(CliTest, PlanReportOnEmptyManifest) {
  cli::PlanOptions o;
  o.manifest = std::string(CUCTX_DATA_DIR) + "/empty.tsv";
  std::ostringstream out;
  EXPECT_EQ(cli::run_plan(o, out), 0);
  EXPECT_NE(out.str().find("0 steps, 0/0 frames filled, utilization 100.0% (1.0000)"), std::string::npos)
      << out.str();
}

TEST_F(CliTest, PlanRejectsOversizeUtterance) {
  cli::PlanOptions o;
  o.manifest = write("m.tsv", "a\tshort\t3\t-\t\na\tlong\t12\t-\t\n");
  std::ostringstream out;
  try {
    cli::run_plan(o, out);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCapacity);
    EXPECT_NE(std::string(e.what()).find("'long'"), std::string::npos);
  }
}

TEST_F(CliTest, TrainingIsDeterministic) {
  RunConfig c = toy_training_config();
  c.training.steps = 8;
  cli::TrainOptions o;
  o.manifest = toy_corpus(2, 2);
  o.config = config_file("c.ini", c);
  std::ostringstream out;
  o.out = path("run1");
  cli::run_train(o, out);
  o.out = path("run2");
  cli::run_train(o, out);
  const std::string a = slurp(path("run1/loss.txt"));
  EXPECT_EQ(a, slurp(path("run2/loss.txt")));
  EXPECT_EQ(slurp(path("run1/model.ckpt")), slurp(path("run2/model.ckpt")));
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 8);
  o.seed = 99;
  o.out = path("run3");
  cli::run_train(o, out);
  EXPECT_NE(a, slurp(path("run3/loss.txt")));
}

TEST_F(CliTest, EmbedConcatWithoutPredecessorsMatchesNoFusion) {
  RunConfig c = toy_training_config();
  c.training.steps = 10;
  cli::TrainOptions o;
  o.manifest = toy_corpus(4, 1);
  std::ostringstream out;
  c.fusion.method = FusionMethod::kNone;
  o.config = config_file("none.ini", c);
  o.out = path("none");
  cli::run_train(o, out);
  c.fusion.method = FusionMethod::kEmbedConcat;
  o.config = config_file("embed.ini", c);
  o.out = path("embed");
  cli::run_train(o, out);
  EXPECT_EQ(slurp(path("none/loss.txt")), slurp(path("embed/loss.txt")));
}

TEST_F(CliTest, TrainThenDecodeReproducesLabels) {
  cli::TrainOptions t;
  t.manifest = toy_corpus(3, 3);
  t.config = config_file("c.ini", toy_training_config());
  t.out = path("run");
  std::ostringstream out;
  EXPECT_EQ(cli::run_train(t, out), 0);

  cli::DecodeOptions d;
  d.manifest = t.manifest;
  d.checkpoint = path("run/model.ckpt");
  d.out = path("decode.txt");
  std::ostringstream report;
  EXPECT_EQ(cli::run_decode(d, report), 0);
  EXPECT_NE(report.str().find("TER 0.0000 ("), std::string::npos) << report.str();
  EXPECT_EQ(slurp(path("decode.txt")), report.str());

  d.manifest = std::string(CUCTX_DATA_DIR) + "/empty.tsv";
  std::ostringstream empty;
  EXPECT_EQ(cli::run_decode(d, empty), 0);
  EXPECT_EQ(empty.str(), "");

  // Checkpoint from a different model width.
  RunConfig wide = toy_training_config();
  wide.model.d_model = 48;
  d.manifest = t.manifest;
  d.config = config_file("wide.ini", wide);
  try {
    std::ostringstream ignored;
    cli::run_decode(d, ignored);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
}

TEST_F(CliTest, DecodeRejectsOutOfOrderManifest) {
  cli::DecodeOptions d;
  d.manifest = write("m.tsv", "a\tu1\t8\tx.bin\t1\nb\tv1\t8\tx.bin\t1\na\tu2\t8\tx.bin\t1\n");
  d.checkpoint = path("none.ckpt");
  d.config = config_file("c.ini", toy_training_config());
  std::ostringstream out;
  try {
    cli::run_decode(d, out);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kManifest);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST_F(CliTest, TrainRejectsFeatureWidthMismatch) {
  RunConfig c = toy_training_config();
  c.model.input_dim = 12;
  cli::TrainOptions o;
  o.manifest = toy_corpus(1, 1);
  o.config = config_file("c.ini", c);
  o.out = path("run");
  std::ostringstream out;
  try {
    cli::run_train(o, out);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
}

TEST_F(CliTest, MaskDumpFirstRow) {
  cli::MaskDumpOptions o;
  o.mode = "streaming";
  o.chunk = 3;
  o.lookahead = "0";
  o.prev = {6, 9};
  std::ostringstream out;
  EXPECT_EQ(cli::run_mask_dump(o, out), 0);
  std::istringstream lines(out.str());
  std::string line;
  std::vector<std::string> grid;
  while (std::getline(lines, line)) {
    const auto space = line.find(' ');
    if (!line.empty() && std::isdigit(static_cast<unsigned char>(line[0])) && space != std::string::npos) {
      grid.push_back(line.substr(space + 1));
    }
  }
  ASSERT_EQ(grid.size(), 9u);
  EXPECT_EQ(std::count(grid[0].begin(), grid[0].end(), '1'), 15 + 3);
  EXPECT_EQ(std::count(grid[8].begin(), grid[8].end(), '1'), 15 + 9);

  cli::MaskDumpOptions solid;
  std::ostringstream full;
  cli::run_mask_dump(solid, full);
  std::istringstream full_lines(full.str());
  int rows = 0;
  while (std::getline(full_lines, line)) {
    if (line.empty() || !std::isdigit(static_cast<unsigned char>(line[0]))) continue;
    ++rows;
    EXPECT_EQ(line.substr(line.find(' ') + 1), std::string(9, '1'));
  }
  EXPECT_EQ(rows, 9);
}

TEST_F(CliTest, GradcheckPasses) {
  cli::GradcheckOptions o;
  std::ostringstream out;
  EXPECT_EQ(cli::run_gradcheck(o, out), 0);
  EXPECT_NE(out.str().find("PASS"), std::string::npos) << out.str();
}

struct ToolRun {
  int status = 0;
  std::string out;
  std::string err;
};

class ToolTest : public CliTest {
 protected:
  ToolRun run(const std::string& args) const {
    const std::string cmd = std::string("\"") + CUCTX_TOOL + "\" " + args + " >\"" + path("stdout") +
                            "\" 2>\"" + path("stderr") + "\"";
    const int raw = std::system(cmd.c_str());
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(path("stdout")), slurp(path("stderr"))};
  }
};

TEST_F(ToolTest, PlanSucceedsOnReferenceData) {
  ToolRun r = run(std::string("plan --manifest ") + CUCTX_DATA_DIR + "/reference_plan.tsv --config " +
                  CUCTX_DATA_DIR + "/reference_plan.ini");
  EXPECT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("utilization 90.4%"), std::string::npos);
}

TEST_F(ToolTest, ErrorsExitNonzeroWithOneLine) {
  const std::string oversize = write("big.tsv", "a\tu1\t30\t-\t\n");
  const std::string unordered = write("bad.tsv", "a\tu1\t3\t-\t\nb\tv\t3\t-\t\na\tu2\t3\t-\t\n");
  const std::string badcfg = write("bad.ini", "[model]\nwidth = 3\n");
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"plan --manifest " + oversize, "error: capacity: "},
      {"plan --manifest " + unordered, "error: manifest: line 3: "},
      {"plan --manifest " + path("missing.tsv"), "error: io: "},
      {"plan --manifest " + oversize + " --config " + badcfg, "error: config: "},
      {"mask dump --mode streaming --chunk 0", "error: "},
      {"decode --manifest " + oversize + " --checkpoint " + path("nothing.ckpt"), "error: "},
  };
  for (const auto& [args, prefix] : cases) {
    ToolRun r = run(args);
    EXPECT_NE(r.status, 0) << args;
    EXPECT_EQ(r.err.rfind(prefix, 0), 0u) << args << "\n" << r.err;
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << args << "\n" << r.err;
  }
  ToolRun usage = run("plan");
  EXPECT_EQ(usage.status, 2);
}

}  // namespace
}  // namespace cuctx

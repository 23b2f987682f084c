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

#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cuctx/cli.hpp"
#include "cuctx/error.hpp"

namespace {

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace cuctx::cli;
  CLI::App app{"cross-utterance context Conformer-Transducer toolkit"};
  app.require_subcommand(1);

  PlanOptions plan;
  auto* plan_cmd = app.add_subcommand("plan", "schedule a manifest and report utilization");
  plan_cmd->add_option("--manifest", plan.manifest, "manifest TSV")->required();
  plan_cmd->add_option("--config", plan.config, "run config");
  plan_cmd->add_option("--out", plan.out, "write the structured plan (configured mode) here");

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "train on a manifest");
  train_cmd->add_option("--manifest", train.manifest, "manifest TSV")->required();
  train_cmd->add_option("--config", train.config, "run config");
  train_cmd->add_option("--seed", train.seed, "override training.seed");
  train_cmd->add_option("--out", train.out, "output directory")->capture_default_str();

  DecodeOptions decode;
  auto* decode_cmd = app.add_subcommand("decode", "greedy-decode a manifest");
  decode_cmd->add_option("--manifest", decode.manifest, "manifest TSV")->required();
  decode_cmd->add_option("--checkpoint", decode.checkpoint, "model checkpoint")->required();
  decode_cmd->add_option("--config", decode.config, "run config (default: beside checkpoint)");
  decode_cmd->add_option("--out", decode.out, "also write the report here");

  MaskDumpOptions mask;
  auto* mask_cmd = app.add_subcommand("mask", "attention-mask tools");
  auto* dump_cmd = mask_cmd->add_subcommand("dump", "print a composed 0/1 mask grid");
  mask_cmd->require_subcommand(1);
  dump_cmd->add_option("--config", mask.config, "run config ([mask] section)");
  dump_cmd->add_option("--mode", mask.mode, "streaming | non_streaming");
  dump_cmd->add_option("--chunk", mask.chunk, "chunk size in frames");
  dump_cmd->add_option("--lookahead", mask.lookahead, "frames or 'unlimited'");
  dump_cmd->add_option("--left-cap", mask.left_cap, "current-utterance left cap or 'unlimited'");
  dump_cmd->add_option("--prev", mask.prev, "previous utterance lengths, most recent first")
      ->delimiter(',');
  dump_cmd->add_option("--prev-cap-kind", mask.prev_cap_kind, "unlimited | frames | utterances");
  dump_cmd->add_option("--prev-cap", mask.prev_cap, "previous-context cap");
  dump_cmd->add_option("--frames", mask.frames, "current utterance length")->capture_default_str();
  dump_cmd->add_option("--out", mask.out, "also write the grid here");

  GradcheckOptions gradcheck;
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of model gradients");
  grad_cmd->add_option("--config", gradcheck.config, "run config (default: small method-B model)");
  grad_cmd->add_option("--seed", gradcheck.seed, "seed")->capture_default_str();

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "write a toy corpus, manifest and config");
  synth_cmd->add_option("--out", synth.out, "output directory")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "seed")->capture_default_str();
  synth_cmd->add_option("--conversations", synth.conversations)->capture_default_str();
  synth_cmd->add_option("--utterances", synth.utterances)->capture_default_str();
  synth_cmd->add_option("--input-dim", synth.input_dim)->capture_default_str();
  synth_cmd->add_option("--vocab", synth.vocab)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: usage: " << one_line(e.what()) << "\n";
    return 2;
  }

  try {
    if (*plan_cmd) return run_plan(plan, std::cout);
    if (*train_cmd) return run_train(train, std::cout);
    if (*decode_cmd) return run_decode(decode, std::cout);
    if (*dump_cmd) return run_mask_dump(mask, std::cout);
    if (*grad_cmd) return run_gradcheck(gradcheck, std::cout);
    if (*synth_cmd) return run_synth(synth, std::cout);
  } catch (const cuctx::Error& e) {
    std::cerr << "error: " << cuctx::to_string(e.kind()) << ": " << one_line(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}

// tools/specsal.cpp
//
// Copyright 2026  The Specsal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Command-line driver for the staged experiment pipeline.
//
//   specsal probe      --corpus manifest.json --out dir [--config cfg.json]
//   specsal importance --corpus manifest.json --out dir ...
//   specsal evaluate   --corpus manifest.json --out dir ...
//   specsal report     --corpus manifest.json --out dir ...
//   specsal verify     --out dir [--seed N]
//
// Exit codes: 0 success, 1 usage, 2 bad data or failed checks, 3 external
// recognizer failure.

#include <cstdint>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "specsal/config.hpp"
#include "specsal/pipeline.hpp"
#include "specsal/verify.hpp"

namespace {

struct StageOptions {
  std::string config;
  std::string corpus;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = int(std::thread::hardware_concurrency());
  bool resume = false;
};

void add_stage_options(CLI::App* cmd, StageOptions& opts) {
  cmd->add_option("--config", opts.config, "experiment config JSON (defaults used if omitted)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--corpus", opts.corpus, "corpus manifest.json")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", opts.out, "output directory")->required();
  cmd->add_option("--seed", opts.seed, "override the config's base seed")
      ->each([&](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--workers", opts.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--resume", opts.resume, "reuse per-utterance results already on disk");
}

int run_stage(const std::string& verb, const StageOptions& opts) {
  specsal::ExperimentConfig cfg;
  if (!opts.config.empty()) cfg = specsal::load_config(opts.config);
  if (opts.seed_set) cfg.seed = opts.seed;
  cfg.validate();

  specsal::Pipeline pipe(cfg, specsal::load_corpus(opts.corpus),
                         {opts.out, opts.workers, opts.resume});
  if (verb == "probe") {
    pipe.run_probe();
  } else if (verb == "importance") {
    pipe.run_importance();
  } else if (verb == "evaluate") {
    pipe.run_evaluate();
  } else {
    pipe.run_report();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bubble-noise saliency experiments"};
  app.set_version_flag("--version", specsal::kVersion);
  app.require_subcommand(1);

  StageOptions stage_opts[4];
  const char* verbs[4] = {"probe", "importance", "evaluate", "report"};
  const char* blurbs[4] = {"score bubble mixtures per utterance",
                           "build per-word importance maps",
                           "run masked evaluations over the threshold grids",
                           "write SSBM, accuracy-curve and trend tables"};
  CLI::App* stage_cmds[4];
  for (int i = 0; i < 4; ++i) {
    stage_cmds[i] = app.add_subcommand(verbs[i], blurbs[i]);
    add_stage_options(stage_cmds[i], stage_opts[i]);
  }

  std::string verify_out;
  std::uint64_t verify_seed = 1;
  int verify_workers = int(std::thread::hardware_concurrency());
  bool verify_resume = false;
  CLI::App* verify_cmd =
      app.add_subcommand("verify", "run everything on the synthetic corpus and "
                                   "check the built-in invariants");
  verify_cmd->add_option("--out", verify_out, "working directory")->required();
  verify_cmd->add_option("--seed", verify_seed, "base seed");
  verify_cmd->add_option("--workers", verify_workers, "worker threads")
      ->check(CLI::PositiveNumber);
  verify_cmd->add_flag("--resume", verify_resume, "reuse results already on disk");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (verify_cmd->parsed()) {
      const specsal::VerifyReport report =
          specsal::run_verify(verify_out, verify_seed, verify_workers, verify_resume);
      specsal::print_verify_report(report, std::cout);
      return report.all_pass() ? 0 : 2;
    }
    for (int i = 0; i < 4; ++i) {
      if (stage_cmds[i]->parsed()) return run_stage(verbs[i], stage_opts[i]);
    }
    return 1;
  } catch (const specsal::UsageError& e) {
    std::cerr << "specsal: " << e.what() << '\n';
    return 1;
  } catch (const specsal::ExternalToolError& e) {
    std::cerr << "specsal: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "specsal: " << e.what() << '\n';
    return 2;
  }
}

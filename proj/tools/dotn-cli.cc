// tools/dotn-cli.cc

// Copyright 2026  The dotn Authors

// See ../LICENSE for clarification regarding multiple authors
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


// Command-line driver for corpus generation, training, evaluation and
// reporting. Run "dotn --help" or "dotn <subcommand> --help" for usage.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dotn/error.h"
#include "dotn/experiment.h"

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out;
  bool resume = false;
  bool quiet = false;
};

void AddCommonFlags(CLI::App *cmd, CommonFlags *flags) {
  cmd->add_option("--config", flags->config_path, "Experiment config (JSON)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", flags->seed, "Override the experiment seed");
  cmd->add_option("--out", flags->out, "Output directory (overrides output_dir)");
  cmd->add_flag("--resume", flags->resume,
                "Continue partially trained stages from their checkpoints");
  cmd->add_flag("-q,--quiet", flags->quiet, "Suppress progress lines");
}

int Run(dotn::Stage stage, const CommonFlags &flags) {
  dotn::ExperimentConfig config = flags.config_path.empty()
                                      ? dotn::ExperimentConfig::Default()
                                      : dotn::LoadExperimentConfig(flags.config_path);
  if (flags.seed) config.seed = *flags.seed;
  if (!flags.out.empty()) config.output_dir = flags.out;
  config.Finalize();

  dotn::RunOptions options;
  options.output_dir = config.output_dir;
  options.resume = flags.resume;
  options.last_stage = stage;
  auto start = std::chrono::steady_clock::now();
  if (!flags.quiet)
    options.progress = [start](const std::string &msg) {
      double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::fprintf(stderr, "[%7.1fs] %s\n", s, msg.c_str());
    };
  dotn::ExperimentResult result = dotn::RunExperiment(config, options);
  if (stage >= dotn::Stage::kEvaluate) {
    for (const dotn::SystemResult *r : {&result.source_only, &result.dotn}) {
      dotn::MetricValues v = r->target.Overall();
      std::printf("%-12s target mse %.4f  si-sdr %.3f dB  lsd %.3f dB  source mse %.4f\n",
                  r->target.system.c_str(), v.mse, v.si_sdr_db, v.lsd_db, r->source_mse);
    }
    std::printf("artifacts in %s\n", config.output_dir.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Optimal-transport domain adaptation for spectral enhancement"};
  app.require_subcommand(1);
  struct Sub {
    const char *name;
    const char *help;
    dotn::Stage stage;
  };
  const Sub subs[] = {
      {"gen", "Generate (or reuse) the synthetic corpus", dotn::Stage::kGenerate},
      {"train", "Train the source-only baseline and DOTN", dotn::Stage::kTrain},
      {"eval", "Evaluate both systems on the held-out target split", dotn::Stage::kEvaluate},
      {"report", "Write comparison tables, plot data and summary", dotn::Stage::kReport},
      {"all", "Run every stage", dotn::Stage::kReport},
  };
  CommonFlags flags;
  std::optional<dotn::Stage> chosen;
  for (const Sub &s : subs) {
    CLI::App *cmd = app.add_subcommand(s.name, s.help);
    AddCommonFlags(cmd, &flags);
    dotn::Stage stage = s.stage;
    cmd->callback([&chosen, stage] { chosen = stage; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e);
  }
  try {
    return Run(*chosen, flags);
  } catch (const dotn::Error &e) {
    std::fprintf(stderr, "dotn: %s error: %s\n", dotn::ErrorKindName(e.kind()), e.what());
    return 2;
  } catch (const std::filesystem::filesystem_error &e) {
    std::fprintf(stderr, "dotn: io error: %s\n", e.what());
    return 2;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "dotn: internal error: %s\n", e.what());
    return 1;
  }
}

// include/dotn/experiment.h

// Copyright 2026  The dotn Authors

// See ../../LICENSE for clarification regarding multiple authors
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


#ifndef DOTN_EXPERIMENT_H_
#define DOTN_EXPERIMENT_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dotn/config-io.h"
#include "dotn/datagen.h"
#include "dotn/metrics.h"
#include "dotn/neural-net.h"
#include "dotn/trainer.h"

namespace dotn {

struct ModelConfig {
  int context = 5;                             // frames, odd
  std::vector<int> estimator_hidden{256, 256};
  std::vector<int> critic_hidden{64, 64};
  Activation hidden_activation = Activation::kLeakyRelu;
};

/// One comparison run: a source-only baseline and DOTN adapted from the
/// baseline's state after `pretrain_iterations` source-only iterations.
/// The baseline then continues for as many iterations as DOTN runs, so
/// both systems see the same number of source-only iterations before the
/// split and the same number of iterations after it.
struct ExperimentConfig {
  CorpusConfig corpus;
  ModelConfig model;
  int pretrain_iterations = 1500;
  TrainSchedule source_only;
  TrainSchedule dotn;
  // alpha/beta of the joint cost; absent means 1/d_in and 1/d_out so both
  // distances are per-dimension averages.
  std::optional<double> alpha, beta;
  EvalOptions metrics;
  // Also run DOTN with the first 1, 2, ... target families and emit the
  // target-complexity series.
  bool complexity_study = false;
  std::string output_dir = "dotn-out";
  uint64_t seed = 1;

  static ExperimentConfig Default();
  /// Derives the corpus seed, schedule seeds and joint-cost weights from
  /// `seed` and the model, then validates everything.
  void Finalize();
};

Json ExperimentConfigToJson(const ExperimentConfig &c);
/// Reads a config file body. Unknown keys and out-of-range values raise a
/// config error naming the field path.
ExperimentConfig ExperimentConfigFromJson(const nlohmann::json &j);
ExperimentConfig LoadExperimentConfig(const std::string &path);

struct SystemResult {
  EvalReport target;         // held-out target split
  double target_mse = 0.0;   // normalized-feature MSE, all held-out frames
  double source_mse = 0.0;   // same on the held-out source split
  TrainLog log;
};

struct ExperimentResult {
  SystemResult source_only;
  SystemResult dotn;
  // Per target-family count k (k = 1 .. K) when complexity_study is set.
  std::vector<SystemResult> complexity;
};

enum class Stage { kGenerate, kTrain, kEvaluate, kReport };

struct RunOptions {
  // Stop after this stage. Earlier stages are reused from the output
  // directory when their inputs are unchanged.
  Stage last_stage = Stage::kReport;
  // When set, artifacts are written here and completed stages are reused.
  std::optional<std::string> output_dir;
  bool resume = false;
  // Progress lines; may be empty.
  std::function<void(const std::string &)> progress;
};

/// Runs the whole pipeline: corpus, normalizer, baseline, DOTN, evaluation
/// and reports. With an output directory the layout is
///   corpus/                    manifest.json and waveforms
///   normalizer.txt
///   pretrain/, source_only/, dotn/    trainer checkpoints and log.jsonl
///   reports/<system>.csv|json  per (family, SNR) metrics
///   comparison.md              SNR rows by system x metric, plus Avg
///   plot/                      columnar series for plotting
///   summary.json
ExperimentResult RunExperiment(const ExperimentConfig &config,
                               const RunOptions &options = {});

/// Markdown tables, one per target family: rows are SNRs plus "Avg",
/// columns are system x metric. Values are report cells verbatim.
std::string ComparisonTable(const std::vector<EvalReport> &reports);

struct PlotSeries {
  std::string system;
  int target_families = 1;
  EvalReport report;
};

/// Writes <system>-k<families>-vs-snr.tsv per report and, for each system
/// seen with more than one family count, <system>-vs-family-count.tsv with
/// one row per count holding the report's overall averages. Returns the
/// files written. Throws an argument error on empty input.
std::vector<std::string> EmitPlotData(const std::vector<PlotSeries> &series,
                                      const std::string &dir);

}  // namespace dotn

#endif  // DOTN_EXPERIMENT_H_

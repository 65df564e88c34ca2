// src/experiment.cc

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


#include "dotn/experiment.h"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "dotn/error.h"

namespace fs = std::filesystem;

namespace dotn {

ExperimentConfig ExperimentConfig::Default() {
  ExperimentConfig c;
  c.corpus = CorpusConfig::Default();
  c.source_only.iterations = 1500;
  c.dotn.iterations = 1500;
  return c;
}

void ExperimentConfig::Finalize() {
  corpus.seed = seed;
  source_only.seed = DeriveSeed(seed, 20);
  dotn.seed = DeriveSeed(seed, 21);
  if (model.context < 1 || model.context % 2 == 0)
    ThrowConfigError("model.context must be a positive odd number");
  for (int h : model.estimator_hidden)
    if (h < 1) ThrowConfigError("model.estimator_hidden entries must be >= 1");
  for (int h : model.critic_hidden)
    if (h < 1) ThrowConfigError("model.critic_hidden entries must be >= 1");
  if (pretrain_iterations < 0) ThrowConfigError("pretrain_iterations must be >= 0");
  corpus.Validate();
  const int bins = corpus.spectral.num_bins();
  dotn.joint.alpha = alpha.value_or(1.0 / (model.context * bins));
  dotn.joint.beta = beta.value_or(1.0 / bins);
  auto check = [](const TrainSchedule &s, const char *name) {
    try {
      s.Validate();
    } catch (const Error &e) {
      std::string msg = e.what();
      if (msg.rfind("schedule", 0) == 0) msg = name + msg.substr(8);
      ThrowConfigError(msg);
    }
  };
  check(source_only, "source_only");
  check(dotn, "dotn");
  if (output_dir.empty()) ThrowConfigError("output_dir must not be empty");
}

Json ExperimentConfigToJson(const ExperimentConfig &c) {
  Json j;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["corpus"] = CorpusConfigToJson(c.corpus);
  Json model;
  model["context"] = c.model.context;
  model["estimator_hidden"] = c.model.estimator_hidden;
  model["critic_hidden"] = c.model.critic_hidden;
  model["hidden_activation"] = ActivationName(c.model.hidden_activation);
  j["model"] = model;
  j["pretrain_iterations"] = c.pretrain_iterations;
  j["source_only"] = TrainScheduleToJson(c.source_only);
  j["dotn"] = TrainScheduleToJson(c.dotn);
  j["alpha"] = c.alpha ? Json(*c.alpha) : Json("auto");
  j["beta"] = c.beta ? Json(*c.beta) : Json("auto");
  j["metrics"] = Json{{"use_clean_phase", c.metrics.use_clean_phase}};
  j["complexity_study"] = c.complexity_study;
  return j;
}

namespace {

std::vector<int> ReadIntList(const JsonReader &r, const char *key, std::vector<int> def) {
  if (!r.Has(key)) return def;
  const nlohmann::json &v = r.At(key);
  if (!v.is_array()) ThrowConfigError(r.Field(key) + ": expected an array");
  std::vector<int> out;
  for (size_t i = 0; i < v.size(); i++) {
    if (!v[i].is_number_integer())
      ThrowConfigError(r.Field(key) + "[" + std::to_string(i) + "]: expected an integer");
    out.push_back(v[i].get<int>());
  }
  return out;
}

std::optional<double> ReadAutoNumber(const JsonReader &r, const char *key) {
  if (!r.Has(key)) return std::nullopt;
  const nlohmann::json &v = r.At(key);
  if (v.is_string() && v.get<std::string>() == "auto") return std::nullopt;
  if (!v.is_number() || !(v.get<double>() > 0.0))
    ThrowConfigError(r.Field(key) + ": expected a positive number or \"auto\"");
  return v.get<double>();
}

}  // namespace

ExperimentConfig ExperimentConfigFromJson(const nlohmann::json &j) {
  JsonReader r(j, "");
  r.AllowOnly({"seed", "output_dir", "corpus", "model", "pretrain_iterations",
               "source_only", "dotn", "alpha", "beta", "metrics", "complexity_study"});
  ExperimentConfig c = ExperimentConfig::Default();
  r.Read("seed", &c.seed);
  r.Read("output_dir", &c.output_dir);
  if (r.Has("corpus")) {
    nlohmann::json corpus = r.At("corpus");
    // The experiment seed drives the corpus; a corpus-level seed is ignored.
    if (corpus.is_object()) corpus.erase("seed");
    c.corpus = CorpusConfigFromJson(corpus, "corpus");
  }
  if (r.Has("model")) {
    JsonReader m(r.At("model"), "model");
    m.AllowOnly({"context", "estimator_hidden", "critic_hidden", "hidden_activation"});
    m.Read("context", &c.model.context);
    c.model.estimator_hidden = ReadIntList(m, "estimator_hidden", c.model.estimator_hidden);
    c.model.critic_hidden = ReadIntList(m, "critic_hidden", c.model.critic_hidden);
    std::string act = ActivationName(c.model.hidden_activation);
    m.Read("hidden_activation", &act);
    try {
      c.model.hidden_activation = ActivationFromName(act);
    } catch (const Error &e) {
      ThrowConfigError(m.Field("hidden_activation") + ": " + e.what());
    }
  }
  r.Read("pretrain_iterations", &c.pretrain_iterations);
  if (r.Has("source_only"))
    c.source_only = TrainScheduleFromJson(r.At("source_only"), "source_only", c.source_only);
  if (r.Has("dotn")) c.dotn = TrainScheduleFromJson(r.At("dotn"), "dotn", c.dotn);
  c.alpha = ReadAutoNumber(r, "alpha");
  c.beta = ReadAutoNumber(r, "beta");
  if (r.Has("metrics")) {
    JsonReader m(r.At("metrics"), "metrics");
    m.AllowOnly({"use_clean_phase"});
    m.Read("use_clean_phase", &c.metrics.use_clean_phase);
  }
  r.Read("complexity_study", &c.complexity_study);
  c.Finalize();
  return c;
}

ExperimentConfig LoadExperimentConfig(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kIo, "cannot read config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::exception &e) {
    ThrowConfigError(path + ": " + e.what());
  }
  return ExperimentConfigFromJson(j);
}

namespace {

std::string FormatValue(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// Writes via a temporary file so a crash never leaves a torn artifact.
void WriteFile(const fs::path &path, const std::string &text) {
  fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    os << text;
    if (!os) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string ReadFile(const fs::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return {};
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::vector<std::string> FamilyNames(const std::vector<NoiseSpec> &noises) {
  std::vector<std::string> out;
  for (const NoiseSpec &n : noises) out.push_back(NoiseFamilyName(n.family));
  return out;
}

template <typename U>
std::vector<U> KeepFamilies(const std::vector<U> &utts, const std::vector<NoiseSpec> &keep) {
  std::set<NoiseFamily> families;
  for (const NoiseSpec &n : keep) families.insert(n.family);
  std::vector<U> out;
  for (const U &u : utts)
    if (families.count(u.noise.family)) out.push_back(u);
  return out;
}

// Everything derived from one corpus that the training stages need.
struct Prepared {
  Corpus corpus;
  FeatureNormalizer norm;
  FrameDataset source{1, 1}, target{1, 1}, heldout{1, 1}, source_heldout{1, 1};
};

Prepared Prepare(Corpus corpus, FeatureNormalizer norm, int context) {
  const SpectralConfig &sp = corpus.config.spectral;
  Prepared p;
  p.source = MakeSourceDataset(corpus.source, sp, norm, context);
  p.target = MakeTargetDataset(corpus.target, sp, norm, context);
  p.heldout = MakeLabeledDataset(corpus.heldout, sp, norm, context);
  p.source_heldout = MakeLabeledDataset(corpus.source_heldout, sp, norm, context);
  p.corpus = std::move(corpus);
  p.norm = std::move(norm);
  return p;
}

class Runner {
 public:
  Runner(const ExperimentConfig &config, const RunOptions &options)
      : config_(config), options_(options) {
    if (options_.output_dir) root_ = *options_.output_dir;
  }

  ExperimentResult Run();

 private:
  void Progress(const std::string &msg) const {
    if (options_.progress) options_.progress(msg);
  }
  bool persistent() const { return !root_.empty(); }

  Corpus LoadOrBuildCorpus();

  // Runs (or reuses) one training stage. `signature` identifies the inputs
  // apart from the iteration count; a stored checkpoint is reused only if
  // its signature matches, and with --resume a shorter one is extended.
  TrainerState RunStage(const std::string &name, const std::string &signature,
                        const std::function<TrainerState()> &init,
                        const std::function<void(TrainerState *, const TrainHooks &)> &train,
                        const TrainSchedule &sched, const Prepared &data);

  SystemResult Score(const std::string &system, const TrainerState &state,
                     const Prepared &data, const std::vector<NoiseSpec> &families);

  ExperimentConfig config_;
  RunOptions options_;
  fs::path root_;
};

Corpus Runner::LoadOrBuildCorpus() {
  const std::string wanted = CorpusConfigToJson(config_.corpus).dump();
  if (persistent() && fs::exists(root_ / "corpus" / "manifest.json")) {
    Corpus cached = ReadCorpus((root_ / "corpus").string());
    if (CorpusConfigToJson(cached.config).dump() == wanted) {
      Progress("corpus: reusing " + (root_ / "corpus").string());
      return cached;
    }
    Progress("corpus: cached corpus has a different config, regenerating");
  }
  Progress("corpus: generating");
  Corpus corpus = BuildCorpus(config_.corpus);
  if (persistent()) {
    fs::remove_all(root_ / "corpus");
    WriteCorpus(corpus, (root_ / "corpus").string());
  }
  return corpus;
}

TrainerState Runner::RunStage(
    const std::string &name, const std::string &signature,
    const std::function<TrainerState()> &init,
    const std::function<void(TrainerState *, const TrainHooks &)> &train,
    const TrainSchedule &sched, const Prepared &data) {
  const fs::path dir = root_ / name;
  TrainHooks hooks;
  hooks.evaluate = [&](const Network &f, int64_t iter) {
    return EvalPoint{iter, DatasetMse(f, data.heldout), DatasetMse(f, data.source_heldout)};
  };
  if (persistent()) {
    hooks.checkpoint = [dir](const TrainerState &s) { s.Save(dir.string()); };
    if (fs::exists(dir / "state.json") && ReadFile(dir / "stage.json") == signature) {
      TrainerState s = TrainerState::Load(dir.string());
      if (s.iteration == sched.iterations) {
        Progress(name + ": reusing completed checkpoint");
        return s;
      }
      if (options_.resume && s.iteration < sched.iterations) {
        Progress(name + ": resuming at iteration " + std::to_string(s.iteration));
        // The end-of-run evaluation of the shorter run is not part of an
        // uninterrupted log.
        auto &evals = s.log.evals;
        if (!evals.empty() && evals.back().iteration == s.iteration &&
            (sched.eval_every == 0 || s.iteration % sched.eval_every != 0))
          evals.pop_back();
        train(&s, hooks);
        s.Save(dir.string());
        return s;
      }
    }
    fs::remove_all(dir);
    fs::create_directories(dir);
    WriteFile(dir / "stage.json", signature);
  }
  Progress(name + ": training " + std::to_string(sched.iterations) + " iterations");
  TrainerState s = init();
  train(&s, hooks);
  if (persistent()) s.Save(dir.string());
  return s;
}

SystemResult Runner::Score(const std::string &system, const TrainerState &state,
                           const Prepared &data, const std::vector<NoiseSpec> &families) {
  SystemResult r;
  const SpectralConfig &sp = data.corpus.config.spectral;
  r.target = Evaluate(system, NetworkEnhancer(state.estimator, data.norm, config_.model.context),
                      data.corpus.heldout, FamilyNames(families),
                      data.corpus.config.snr_grid_db, sp, config_.metrics);
  r.target_mse = DatasetMse(state.estimator, data.heldout);
  r.source_mse = DatasetMse(state.estimator, data.source_heldout);
  r.log = state.log;
  return r;
}

ExperimentResult Runner::Run() {
  if (persistent()) {
    fs::create_directories(root_);
    WriteFile(root_ / "config.json", ExperimentConfigToJson(config_).dump(2) + "\n");
  }
  Corpus corpus = LoadOrBuildCorpus();
  ExperimentResult result;
  if (options_.last_stage == Stage::kGenerate) return result;
  const SpectralConfig &sp = config_.corpus.spectral;
  FeatureNormalizer norm = FitNormalizer(corpus.source, sp);
  if (persistent()) {
    std::ostringstream os;
    norm.Write(os);
    WriteFile(root_ / "normalizer.txt", os.str());
  }
  const int context = config_.model.context;
  Prepared full = Prepare(corpus, norm, context);

  const int d_in = full.source.input_dim(), d_out = full.source.output_dim();
  std::vector<int> f_dims{d_in};
  f_dims.insert(f_dims.end(), config_.model.estimator_hidden.begin(),
                config_.model.estimator_hidden.end());
  f_dims.push_back(d_out);
  std::vector<int> h_dims{d_out};
  h_dims.insert(h_dims.end(), config_.model.critic_hidden.begin(),
                config_.model.critic_hidden.end());
  h_dims.push_back(1);
  const Activation act = config_.model.hidden_activation;

  const Json cfg = ExperimentConfigToJson(config_);
  const std::string base_sig =
      Json{{"corpus", cfg["corpus"]}, {"model", cfg["model"]},
           {"source_only", cfg["source_only"]}, {"pretrain_iterations", cfg["pretrain_iterations"]}}
          .dump(2);

  // Stage 1: source-only pretraining shared by both systems.
  TrainSchedule pre_sched = config_.source_only;
  pre_sched.iterations = std::max(1, config_.pretrain_iterations);
  TrainerState pretrain = RunStage(
      "pretrain", base_sig,
      [&] {
        return TrainerState::Create(
            Network::Create(f_dims, act, Activation::kLinear, DeriveSeed(config_.seed, 10)),
            Network(), pre_sched);
      },
      [&](TrainerState *s, const TrainHooks &h) {
        if (config_.pretrain_iterations > 0) TrainSourceOnly(s, full.source, pre_sched, h);
      },
      pre_sched, full);

  // Stage 2: the baseline keeps going on source data alone.
  TrainSchedule base_sched = config_.source_only;
  base_sched.iterations = static_cast<int>(pretrain.iteration) + config_.dotn.iterations;
  TrainerState baseline = RunStage(
      "source_only", base_sig,
      [&] { return pretrain; },
      [&](TrainerState *s, const TrainHooks &h) { TrainSourceOnly(s, full.source, base_sched, h); },
      base_sched, full);

  // Stage 3: DOTN adapted from the pretrained estimator.
  auto run_dotn = [&](const std::string &name, const Prepared &data) {
    Json sig_json = cfg;
    sig_json["dotn"].erase("iterations");
    sig_json["targets"] = FamilyNames(data.corpus.config.target_noises);
    const std::string sig = sig_json.dump(2);
    return RunStage(
        name, sig,
        [&] {
          TrainerState s = TrainerState::Create(
              pretrain.estimator,
              Network::Create(h_dims, act, Activation::kLinear, DeriveSeed(config_.seed, 11)),
              config_.dotn);
          s.estimator_opt = pretrain.estimator_opt;
          s.estimator_opt.config() = config_.dotn.estimator_optimizer;
          return s;
        },
        [&](TrainerState *s, const TrainHooks &h) {
          Train(s, data.source, data.target, config_.dotn, h);
        },
        config_.dotn, data);
  };
  TrainerState adapted = run_dotn("dotn", full);

  // Complexity runs: the same DOTN stage with the first k target families.
  std::vector<std::pair<Prepared, TrainerState>> subsets;
  const std::vector<NoiseSpec> &targets = config_.corpus.target_noises;
  if (config_.complexity_study)
    for (size_t k = 1; k < targets.size(); k++) {
      std::vector<NoiseSpec> subset(targets.begin(), targets.begin() + k);
      Corpus sub = corpus;
      sub.config.target_noises = subset;
      sub.target = KeepFamilies(corpus.target, subset);
      sub.heldout = KeepFamilies(corpus.heldout, subset);
      Prepared data = Prepare(std::move(sub), norm, context);
      TrainerState s = run_dotn("dotn-k" + std::to_string(k), data);
      subsets.emplace_back(std::move(data), std::move(s));
    }
  if (options_.last_stage == Stage::kTrain) return result;

  Progress("evaluating");
  result.source_only = Score("source_only", baseline, full, targets);
  result.dotn = Score("dotn", adapted, full, targets);

  std::vector<PlotSeries> series{{"source_only", static_cast<int>(targets.size()),
                                  result.source_only.target},
                                 {"dotn", static_cast<int>(targets.size()), result.dotn.target}};
  if (config_.complexity_study) {
    for (auto &[data, state] : subsets) {
      SystemResult r = Score("dotn", state, data, data.corpus.config.target_noises);
      series.push_back({"dotn", static_cast<int>(data.corpus.config.target_noises.size()),
                        r.target});
      result.complexity.push_back(std::move(r));
    }
    result.complexity.push_back(result.dotn);
  }

  if (persistent()) {
    for (const SystemResult *r : {&result.source_only, &result.dotn}) {
      std::ostringstream csv, json;
      r->target.WriteCsv(csv);
      r->target.WriteJson(json);
      WriteFile(root_ / "reports" / (r->target.system + ".csv"), csv.str());
      WriteFile(root_ / "reports" / (r->target.system + ".json"), json.str());
    }
    for (size_t k = 0; k + 1 < result.complexity.size(); k++) {
      std::ostringstream csv;
      result.complexity[k].target.WriteCsv(csv);
      WriteFile(root_ / "reports" / ("dotn-k" + std::to_string(k + 1) + ".csv"), csv.str());
    }
    if (options_.last_stage == Stage::kEvaluate) return result;
    WriteFile(root_ / "comparison.md",
              ComparisonTable({result.source_only.target, result.dotn.target}));
    EmitPlotData(series, (root_ / "plot").string());

    Json summary;
    for (const SystemResult *r : {&result.source_only, &result.dotn}) {
      MetricValues overall = r->target.Overall();
      summary[r->target.system] = Json{{"target_feature_mse", r->target_mse},
                                       {"source_feature_mse", r->source_mse},
                                       {"target_mse", overall.mse},
                                       {"target_si_sdr_db", overall.si_sdr_db},
                                       {"target_lsd_db", overall.lsd_db}};
    }
    if (!result.complexity.empty()) {
      Json rows = Json::array();
      for (size_t k = 0; k < result.complexity.size(); k++) {
        const SystemResult &r = result.complexity[k];
        rows.push_back(Json{{"target_families", k + 1},
                            {"first_family_mse", r.target.averages.front().values.mse},
                            {"source_feature_mse", r.source_mse}});
      }
      summary["complexity"] = rows;
    }
    WriteFile(root_ / "summary.json", summary.dump(2) + "\n");
  }
  Progress("done");
  return result;
}

}  // namespace

ExperimentResult RunExperiment(const ExperimentConfig &config, const RunOptions &options) {
  ExperimentConfig c = config;
  c.Finalize();
  return Runner(c, options).Run();
}

std::string ComparisonTable(const std::vector<EvalReport> &reports) {
  if (reports.empty()) ThrowArgumentError("no reports to tabulate");
  std::vector<std::string> families;
  for (const FamilyAverage &a : reports.front().averages) families.push_back(a.family);
  struct Metric {
    const char *name;
    double MetricValues::*field;
  };
  const Metric metrics[] = {{"MSE", &MetricValues::mse},
                            {"SI-SDR (dB)", &MetricValues::si_sdr_db},
                            {"LSD (dB)", &MetricValues::lsd_db}};
  std::ostringstream os;
  for (const std::string &family : families) {
    os << "## Target noise: " << family << "\n\n| SNR (dB) |";
    for (const EvalReport &r : reports)
      for (const Metric &m : metrics) os << ' ' << r.system << ' ' << m.name << " |";
    os << "\n|---|";
    for (size_t i = 0; i < reports.size() * 3; i++) os << "---|";
    os << '\n';
    for (const EvalCell &c : reports.front().cells) {
      if (c.family != family) continue;
      os << "| " << FormatValue(c.snr_db) << " |";
      for (const EvalReport &r : reports) {
        const EvalCell &cell = r.Cell(family, c.snr_db);
        for (const Metric &m : metrics) os << ' ' << FormatValue(cell.values.*m.field) << " |";
      }
      os << '\n';
    }
    os << "| Avg |";
    for (const EvalReport &r : reports)
      for (const Metric &m : metrics)
        os << ' ' << FormatValue(r.Average(family).values.*m.field) << " |";
    os << "\n\n";
  }
  return os.str();
}

std::vector<std::string> EmitPlotData(const std::vector<PlotSeries> &series,
                                      const std::string &dir) {
  if (series.empty()) ThrowArgumentError("no reports to plot");
  std::vector<std::string> written;
  std::map<std::string, std::map<int, MetricValues>> by_count;
  for (const PlotSeries &s : series) {
    std::ostringstream os;
    os << "family\tsnr_db\tmse\tsi_sdr_db\tlsd_db\n";
    for (const EvalCell &c : s.report.cells)
      os << c.family << '\t' << FormatValue(c.snr_db) << '\t' << FormatValue(c.values.mse)
         << '\t' << FormatValue(c.values.si_sdr_db) << '\t' << FormatValue(c.values.lsd_db)
         << '\n';
    fs::path path = fs::path(dir) / (s.system + "-k" + std::to_string(s.target_families) +
                                     "-vs-snr.tsv");
    WriteFile(path, os.str());
    written.push_back(path.string());
    by_count[s.system][s.target_families] = s.report.Overall();
  }
  for (const auto &[system, counts] : by_count) {
    if (counts.size() < 2) continue;
    std::ostringstream os;
    os << "target_families\tmse\tsi_sdr_db\tlsd_db\n";
    for (const auto &[k, v] : counts)
      os << k << '\t' << FormatValue(v.mse) << '\t' << FormatValue(v.si_sdr_db) << '\t'
         << FormatValue(v.lsd_db) << '\n';
    fs::path path = fs::path(dir) / (system + "-vs-family-count.tsv");
    WriteFile(path, os.str());
    written.push_back(path.string());
  }
  return written;
}

}  // namespace dotn

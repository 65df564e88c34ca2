// src/config-io.cc

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


#include "dotn/config-io.h"

#include <algorithm>
#include <cmath>

#include "dotn/error.h"

namespace dotn {

JsonReader::JsonReader(const nlohmann::json &obj, std::string path)
    : obj_(obj), path_(std::move(path)) {
  if (!obj_.is_object()) ThrowConfigError(path_ + ": expected an object");
}

std::string JsonReader::Field(const std::string &key) const {
  return path_.empty() ? key : path_ + "." + key;
}

void JsonReader::AllowOnly(std::initializer_list<const char *> known) const {
  for (auto it = obj_.begin(); it != obj_.end(); ++it) {
    bool ok = std::any_of(known.begin(), known.end(),
                          [&](const char *k) { return it.key() == k; });
    if (!ok) ThrowConfigError(Field(it.key()) + ": unknown key");
  }
}

bool JsonReader::Has(const char *key) const { return obj_.contains(key); }

const nlohmann::json &JsonReader::At(const char *key) const {
  if (!Has(key)) ThrowConfigError(Field(key) + ": missing");
  return obj_.at(key);
}

void JsonReader::Read(const char *key, int *out) const {
  if (!Has(key)) return;
  const nlohmann::json &v = obj_.at(key);
  if (!v.is_number_integer()) ThrowConfigError(Field(key) + ": expected an integer");
  *out = v.get<int>();
}

void JsonReader::Read(const char *key, double *out) const {
  if (!Has(key)) return;
  const nlohmann::json &v = obj_.at(key);
  if (!v.is_number()) ThrowConfigError(Field(key) + ": expected a number");
  *out = v.get<double>();
  if (!std::isfinite(*out)) ThrowConfigError(Field(key) + ": must be finite");
}

void JsonReader::Read(const char *key, bool *out) const {
  if (!Has(key)) return;
  const nlohmann::json &v = obj_.at(key);
  if (!v.is_boolean()) ThrowConfigError(Field(key) + ": expected true or false");
  *out = v.get<bool>();
}

void JsonReader::Read(const char *key, uint64_t *out) const {
  if (!Has(key)) return;
  const nlohmann::json &v = obj_.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<int64_t>() >= 0))
    ThrowConfigError(Field(key) + ": expected a nonnegative integer");
  *out = v.get<uint64_t>();
}

void JsonReader::Read(const char *key, std::string *out) const {
  if (!Has(key)) return;
  const nlohmann::json &v = obj_.at(key);
  if (!v.is_string()) ThrowConfigError(Field(key) + ": expected a string");
  *out = v.get<std::string>();
}

void JsonReader::Read(const char *key, std::vector<double> *out) const {
  if (!Has(key)) return;
  const nlohmann::json &v = obj_.at(key);
  if (!v.is_array()) ThrowConfigError(Field(key) + ": expected an array");
  out->clear();
  for (size_t i = 0; i < v.size(); i++) {
    if (!v[i].is_number())
      ThrowConfigError(Field(key) + "[" + std::to_string(i) + "]: expected a number");
    out->push_back(v[i].get<double>());
  }
}

void JsonReader::ReadPeriod(const char *key, int *out) const {
  if (!Has(key)) return;
  const nlohmann::json &v = obj_.at(key);
  if (v.is_string() && v.get<std::string>() == "never") {
    *out = kNever;
    return;
  }
  if (!v.is_number_integer() || v.get<int64_t>() < 1)
    ThrowConfigError(Field(key) + ": expected an integer >= 1 or \"never\"");
  *out = v.get<int>();
}

Json NoiseSpecToJson(const NoiseSpec &spec) {
  Json j;
  j["family"] = NoiseFamilyName(spec.family);
  j["band_low_hz"] = spec.band_low_hz;
  j["band_high_hz"] = spec.band_high_hz;
  j["modulation_hz"] = spec.modulation_hz;
  return j;
}

NoiseSpec NoiseSpecFromJson(const nlohmann::json &j, const std::string &path) {
  auto family = [&](const std::string &name) {
    try {
      return NoiseFamilyFromName(name);
    } catch (const Error &e) {
      ThrowConfigError(path + ": " + e.what());
    }
  };
  if (j.is_string()) return DefaultNoiseSpec(family(j.get<std::string>()));
  JsonReader r(j, path);
  r.AllowOnly({"family", "band_low_hz", "band_high_hz", "modulation_hz"});
  std::string name;
  r.Read("family", &name);
  if (name.empty()) ThrowConfigError(r.Field("family") + ": missing");
  NoiseSpec spec = DefaultNoiseSpec(family(name));
  r.Read("band_low_hz", &spec.band_low_hz);
  r.Read("band_high_hz", &spec.band_high_hz);
  r.Read("modulation_hz", &spec.modulation_hz);
  return spec;
}

Json SpectralConfigToJson(const SpectralConfig &c) {
  Json j;
  j["window"] = c.window;
  j["hop"] = c.hop;
  j["log_floor"] = c.log_floor;
  return j;
}

SpectralConfig SpectralConfigFromJson(const nlohmann::json &j,
                                      const std::string &path) {
  JsonReader r(j, path);
  r.AllowOnly({"window", "hop", "log_floor"});
  SpectralConfig c;
  r.Read("window", &c.window);
  r.Read("hop", &c.hop);
  r.Read("log_floor", &c.log_floor);
  try {
    c.Validate();
  } catch (const Error &e) {
    ThrowConfigError(path + ": " + e.what());
  }
  return c;
}

Json CorpusConfigToJson(const CorpusConfig &c) {
  Json j;
  j["source_noises"] = Json::array();
  for (const NoiseSpec &s : c.source_noises) j["source_noises"].push_back(NoiseSpecToJson(s));
  j["target_noises"] = Json::array();
  for (const NoiseSpec &s : c.target_noises) j["target_noises"].push_back(NoiseSpecToJson(s));
  j["snr_grid_db"] = c.snr_grid_db;
  j["source_utterances_per_cell"] = c.source_utterances_per_cell;
  j["target_utterances_per_cell"] = c.target_utterances_per_cell;
  j["heldout_utterances_per_cell"] = c.heldout_utterances_per_cell;
  j["source_heldout_utterances_per_cell"] = c.source_heldout_utterances_per_cell;
  j["utterance_seconds"] = c.utterance_seconds;
  j["sample_rate"] = c.sample_rate;
  j["clean_generators"] = Json::array();
  for (CleanGenerator g : c.clean_generators)
    j["clean_generators"].push_back(CleanGeneratorName(g));
  j["spectral"] = SpectralConfigToJson(c.spectral);
  j["seed"] = c.seed;
  return j;
}

CorpusConfig CorpusConfigFromJson(const nlohmann::json &j,
                                  const std::string &path) {
  JsonReader r(j, path);
  r.AllowOnly({"source_noises", "target_noises", "snr_grid_db",
               "source_utterances_per_cell", "target_utterances_per_cell",
               "heldout_utterances_per_cell", "source_heldout_utterances_per_cell",
               "utterance_seconds", "sample_rate",
               "clean_generators", "spectral", "seed"});
  CorpusConfig c = CorpusConfig::Default();
  auto noises = [&](const char *key, std::vector<NoiseSpec> *out) {
    if (!r.Has(key)) return;
    const nlohmann::json &v = r.At(key);
    if (!v.is_array()) ThrowConfigError(r.Field(key) + ": expected an array");
    out->clear();
    for (size_t i = 0; i < v.size(); i++)
      out->push_back(NoiseSpecFromJson(v[i], r.Field(key) + "[" + std::to_string(i) + "]"));
  };
  noises("source_noises", &c.source_noises);
  noises("target_noises", &c.target_noises);
  r.Read("snr_grid_db", &c.snr_grid_db);
  r.Read("source_utterances_per_cell", &c.source_utterances_per_cell);
  r.Read("target_utterances_per_cell", &c.target_utterances_per_cell);
  r.Read("heldout_utterances_per_cell", &c.heldout_utterances_per_cell);
  r.Read("source_heldout_utterances_per_cell", &c.source_heldout_utterances_per_cell);
  r.Read("utterance_seconds", &c.utterance_seconds);
  r.Read("sample_rate", &c.sample_rate);
  if (r.Has("clean_generators")) {
    const nlohmann::json &v = r.At("clean_generators");
    if (!v.is_array()) ThrowConfigError(r.Field("clean_generators") + ": expected an array");
    c.clean_generators.clear();
    for (size_t i = 0; i < v.size(); i++) {
      std::string field = r.Field("clean_generators") + "[" + std::to_string(i) + "]";
      if (!v[i].is_string()) ThrowConfigError(field + ": expected a string");
      try {
        c.clean_generators.push_back(CleanGeneratorFromName(v[i].get<std::string>()));
      } catch (const Error &e) {
        ThrowConfigError(field + ": " + e.what());
      }
    }
  }
  if (r.Has("spectral")) c.spectral = SpectralConfigFromJson(r.At("spectral"), r.Field("spectral"));
  r.Read("seed", &c.seed);
  c.Validate();
  return c;
}

Json AdamConfigToJson(const AdamConfig &c) {
  Json j;
  j["learning_rate"] = c.learning_rate;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["eps_hat"] = c.eps_hat;
  return j;
}

AdamConfig AdamConfigFromJson(const nlohmann::json &j, const std::string &path,
                              const AdamConfig &defaults) {
  JsonReader r(j, path);
  r.AllowOnly({"learning_rate", "beta1", "beta2", "eps_hat"});
  AdamConfig c = defaults;
  r.Read("learning_rate", &c.learning_rate);
  r.Read("beta1", &c.beta1);
  r.Read("beta2", &c.beta2);
  r.Read("eps_hat", &c.eps_hat);
  return c;
}

namespace {

Json PeriodToJson(int period) {
  return period == kNever ? Json("never") : Json(period);
}

}  // namespace

Json TrainScheduleToJson(const TrainSchedule &s) {
  Json j;
  j["batch_size"] = s.batch_size;
  j["clip"] = s.clip;
  j["source_period"] = PeriodToJson(s.source_period);
  j["generator_period"] = PeriodToJson(s.generator_period);
  j["critic_period"] = PeriodToJson(s.critic_period);
  j["iterations"] = s.iterations;
  j["estimator_optimizer"] = AdamConfigToJson(s.estimator_optimizer);
  j["critic_optimizer"] = AdamConfigToJson(s.critic_optimizer);
  Json solver;
  solver["kind"] = s.solver.kind == OtSolverKind::kExact ? "exact" : "sinkhorn";
  solver["epsilon_scale"] = s.solver.epsilon_scale;
  solver["max_iters"] = s.solver.max_iters;
  solver["tol"] = s.solver.tol;
  j["solver"] = solver;
  j["alpha"] = s.joint.alpha;
  j["beta"] = s.joint.beta;
  j["seed"] = s.seed;
  j["eval_every"] = s.eval_every;
  j["checkpoint_every"] = s.checkpoint_every;
  return j;
}

TrainSchedule TrainScheduleFromJson(const nlohmann::json &j,
                                    const std::string &path,
                                    const TrainSchedule &defaults) {
  JsonReader r(j, path);
  r.AllowOnly({"batch_size", "clip", "source_period", "generator_period",
               "critic_period", "iterations", "estimator_optimizer",
               "critic_optimizer", "solver", "alpha", "beta", "seed",
               "eval_every", "checkpoint_every"});
  TrainSchedule s = defaults;
  r.Read("batch_size", &s.batch_size);
  r.Read("clip", &s.clip);
  r.ReadPeriod("source_period", &s.source_period);
  r.ReadPeriod("generator_period", &s.generator_period);
  r.ReadPeriod("critic_period", &s.critic_period);
  r.Read("iterations", &s.iterations);
  if (r.Has("estimator_optimizer"))
    s.estimator_optimizer = AdamConfigFromJson(
        r.At("estimator_optimizer"), r.Field("estimator_optimizer"), s.estimator_optimizer);
  if (r.Has("critic_optimizer"))
    s.critic_optimizer = AdamConfigFromJson(r.At("critic_optimizer"),
                                            r.Field("critic_optimizer"), s.critic_optimizer);
  if (r.Has("solver")) {
    JsonReader sr(r.At("solver"), r.Field("solver"));
    sr.AllowOnly({"kind", "epsilon_scale", "max_iters", "tol"});
    std::string kind = s.solver.kind == OtSolverKind::kExact ? "exact" : "sinkhorn";
    sr.Read("kind", &kind);
    if (kind == "exact") s.solver.kind = OtSolverKind::kExact;
    else if (kind == "sinkhorn") s.solver.kind = OtSolverKind::kSinkhorn;
    else ThrowConfigError(sr.Field("kind") + ": expected \"exact\" or \"sinkhorn\"");
    sr.Read("epsilon_scale", &s.solver.epsilon_scale);
    sr.Read("max_iters", &s.solver.max_iters);
    sr.Read("tol", &s.solver.tol);
  }
  r.Read("alpha", &s.joint.alpha);
  r.Read("beta", &s.joint.beta);
  r.Read("seed", &s.seed);
  r.Read("eval_every", &s.eval_every);
  r.Read("checkpoint_every", &s.checkpoint_every);
  try {
    s.Validate();
  } catch (const Error &e) {
    std::string msg = e.what();
    // Validate() names fields relative to "schedule"; re-root them.
    if (msg.rfind("schedule", 0) == 0) msg = path + msg.substr(8);
    ThrowConfigError(msg);
  }
  return s;
}

}  // namespace dotn

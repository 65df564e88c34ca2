// src/trainer.cc

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


#include "dotn/trainer.h"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "dotn/error.h"
#include "json.hpp"

namespace dotn {

void TrainSchedule::Validate() const {
  if (batch_size < 1) ThrowConfigError("schedule.batch_size must be >= 1");
  if (!(clip > 0.0)) ThrowConfigError("schedule.clip must be > 0");
  if (source_period < 0) ThrowConfigError("schedule.source_period must be >= 1 or never");
  if (generator_period < 0)
    ThrowConfigError("schedule.generator_period must be >= 1 or never");
  if (critic_period < 0) ThrowConfigError("schedule.critic_period must be >= 1 or never");
  if (iterations < 1) ThrowConfigError("schedule.iterations must be >= 1");
  if (eval_every < 0 || checkpoint_every < 0)
    ThrowConfigError("schedule.eval_every and checkpoint_every must be >= 0");
  for (auto [name, opt] : {std::pair{"estimator_optimizer", &estimator_optimizer},
                           std::pair{"critic_optimizer", &critic_optimizer}}) {
    std::string field = std::string("schedule.") + name;
    if (!(opt->learning_rate >= 0.0)) ThrowConfigError(field + ".learning_rate must be >= 0");
    if (!(opt->beta1 >= 0.0 && opt->beta1 < 1.0) || !(opt->beta2 >= 0.0 && opt->beta2 < 1.0))
      ThrowConfigError(field + ": betas must lie in [0, 1)");
    if (!(opt->eps_hat > 0.0)) ThrowConfigError(field + ".eps_hat must be > 0");
  }
  if (solver.kind == OtSolverKind::kSinkhorn) {
    if (!(solver.epsilon_scale > 0.0))
      ThrowConfigError("schedule.solver.epsilon_scale must be > 0");
    if (solver.max_iters < 1) ThrowConfigError("schedule.solver.max_iters must be >= 1");
    if (!(solver.tol > 0.0)) ThrowConfigError("schedule.solver.tol must be > 0");
  }
  try {
    joint.Validate();
  } catch (const Error &e) {
    ThrowConfigError(std::string("schedule.joint: ") + e.what());
  }
}

namespace {

nlohmann::json OptionalJson(const std::optional<double> &v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> OptionalFromJson(const nlohmann::json &j, const char *key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

// Writes `text` to `path` via a temporary file and a rename.
void WriteAtomically(const std::filesystem::path &path,
                     const std::function<void(std::ostream &)> &emit) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
    emit(os);
    if (!os) throw Error(ErrorKind::kIo, "failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::ifstream OpenForRead(const std::filesystem::path &path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  return is;
}

Coupling SolveCoupling(const CostMatrix &cost, const OtSolverConfig &solver,
                       int m) {
  Histogram uniform = Histogram::Uniform(m);
  if (solver.kind == OtSolverKind::kExact) return SolveOtExact(cost, uniform, uniform);
  SinkhornOptions opts;
  opts.epsilon = solver.epsilon_scale * std::max(cost.MaxValue(), 1e-300);
  opts.max_iters = solver.max_iters;
  opts.tol = solver.tol;
  // A non-converged plan is still used; its violation goes into the log.
  return SolveSinkhorn(cost, uniform, uniform, opts).coupling;
}

void CheckDatasets(const TrainerState &state, const FrameDataset &source,
                   const FrameDataset *target) {
  if (source.size() == 0) ThrowArgumentError("source dataset is empty");
  if (!source.labeled()) ThrowArgumentError("source dataset has no labels");
  if (source.input_dim() != state.estimator.input_dim() ||
      source.output_dim() != state.estimator.output_dim())
    ThrowShapeError("source features do not match the estimator");
  if (target) {
    if (target->size() == 0) ThrowArgumentError("target dataset is empty");
    if (target->input_dim() != state.estimator.input_dim())
      ThrowShapeError("target features do not match the estimator");
    if (state.critic.input_dim() != state.estimator.output_dim() ||
        state.critic.output_dim() != 1)
      ThrowShapeError("critic must map estimator outputs to one value");
  }
}

bool ShouldEvaluate(const TrainSchedule &sched, int64_t iter) {
  return iter == sched.iterations || (sched.eval_every > 0 && iter % sched.eval_every == 0);
}

}  // namespace

void TrainLog::WriteJsonLines(std::ostream &os) const {
  for (const TrainRecord &r : records) {
    nlohmann::ordered_json j;
    j["iteration"] = r.iteration;
    j["l1"] = OptionalJson(r.l1);
    j["l2"] = OptionalJson(r.l2);
    j["lh"] = OptionalJson(r.lh);
    j["lf"] = OptionalJson(r.lf);
    j["gamma_violation"] = OptionalJson(r.gamma_violation);
    j["wall_ms"] = r.wall_ms;
    os << j.dump() << '\n';
  }
  for (const EvalPoint &e : evals) {
    nlohmann::ordered_json j;
    j["eval_iteration"] = e.iteration;
    j["target_mse"] = e.target_mse;
    j["source_mse"] = e.source_mse;
    os << j.dump() << '\n';
  }
}

TrainLog TrainLog::ReadJsonLines(std::istream &is) {
  TrainLog log;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    line_no++;
    if (line.empty()) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      if (j.contains("eval_iteration")) {
        log.evals.push_back({j.at("eval_iteration").get<int64_t>(),
                             j.at("target_mse").get<double>(),
                             j.at("source_mse").get<double>()});
        continue;
      }
      TrainRecord r;
      r.iteration = j.at("iteration").get<int64_t>();
      r.l1 = OptionalFromJson(j, "l1");
      r.l2 = OptionalFromJson(j, "l2");
      r.lh = OptionalFromJson(j, "lh");
      r.lf = OptionalFromJson(j, "lf");
      r.gamma_violation = OptionalFromJson(j, "gamma_violation");
      r.wall_ms = j.at("wall_ms").get<double>();
      log.records.push_back(r);
    } catch (const nlohmann::json::exception &e) {
      throw Error(ErrorKind::kIo, "train log line " + std::to_string(line_no) +
                                      ": " + e.what());
    }
  }
  return log;
}

TrainerState TrainerState::Create(Network estimator, Network critic,
                                  const TrainSchedule &sched) {
  sched.Validate();
  TrainerState s;
  s.estimator = std::move(estimator);
  s.critic = std::move(critic);
  // Start the critic inside the clipping box so its Lipschitz bound holds
  // from the first iteration on, not only after its first update.
  if (s.critic.NumLayers() > 0) ClipParameters(&s.critic, sched.clip);
  s.estimator_opt = AdamState(s.estimator, sched.estimator_optimizer);
  s.critic_opt = AdamState(s.critic, sched.critic_optimizer);
  return s;
}

void TrainerState::Save(const std::string &dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  fs::path d(dir);
  WriteAtomically(d / "estimator.txt", [&](std::ostream &os) { estimator.Write(os); });
  WriteAtomically(d / "estimator-adam.txt", [&](std::ostream &os) { estimator_opt.Write(os); });
  if (critic.NumLayers() > 0) {
    WriteAtomically(d / "critic.txt", [&](std::ostream &os) { critic.Write(os); });
    WriteAtomically(d / "critic-adam.txt", [&](std::ostream &os) { critic_opt.Write(os); });
  }
  WriteAtomically(d / "log.jsonl", [&](std::ostream &os) { log.WriteJsonLines(os); });
  // state.json goes last: its presence marks a complete checkpoint.
  WriteAtomically(d / "state.json", [&](std::ostream &os) {
    nlohmann::ordered_json j;
    j["format"] = "dotn-trainer-state";
    j["version"] = 1;
    j["iteration"] = iteration;
    j["has_critic"] = critic.NumLayers() > 0;
    os << j.dump(2) << '\n';
  });
}

TrainerState TrainerState::Load(const std::string &dir) {
  namespace fs = std::filesystem;
  fs::path d(dir);
  nlohmann::json j;
  try {
    std::ifstream is = OpenForRead(d / "state.json");
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::kIo, std::string("corrupt trainer state: ") + e.what());
  }
  if (j.value("format", "") != "dotn-trainer-state" || j.value("version", 0) != 1)
    throw Error(ErrorKind::kIo, "unsupported trainer state in " + dir);
  TrainerState s;
  s.iteration = j.at("iteration").get<int64_t>();
  {
    std::ifstream is = OpenForRead(d / "estimator.txt");
    s.estimator = Network::Read(is);
  }
  {
    std::ifstream is = OpenForRead(d / "estimator-adam.txt");
    s.estimator_opt = AdamState::Read(is);
  }
  if (j.value("has_critic", false)) {
    std::ifstream is = OpenForRead(d / "critic.txt");
    s.critic = Network::Read(is);
    std::ifstream is2 = OpenForRead(d / "critic-adam.txt");
    s.critic_opt = AdamState::Read(is2);
  }
  std::ifstream is = OpenForRead(d / "log.jsonl");
  s.log = TrainLog::ReadJsonLines(is);
  return s;
}

BatchSampler::BatchSampler(int dataset_size, int batch_size, uint64_t seed,
                           uint64_t stream)
    : n_(dataset_size), m_(batch_size), seed_(seed), stream_(stream) {
  if (n_ < 1) ThrowArgumentError("cannot sample from an empty dataset");
  if (m_ < 1) ThrowArgumentError("batch size must be positive");
}

const std::vector<int> &BatchSampler::Permutation(int64_t epoch) {
  if (epoch != cached_epoch_) {
    perm_.resize(n_);
    std::iota(perm_.begin(), perm_.end(), 0);
    std::mt19937_64 rng(DeriveSeed(seed_, stream_, static_cast<uint64_t>(epoch)));
    // Fisher-Yates with our own index draws; std::shuffle's use of the
    // engine is implementation-defined.
    for (int i = n_ - 1; i > 0; i--) {
      int j = static_cast<int>(rng() % static_cast<uint64_t>(i + 1));
      std::swap(perm_[i], perm_[j]);
    }
    cached_epoch_ = epoch;
  }
  return perm_;
}

std::vector<int> BatchSampler::Rows(int64_t iteration) {
  if (iteration < 1) ThrowArgumentError("iterations count from 1");
  std::vector<int> rows(m_);
  int64_t pos = (iteration - 1) * static_cast<int64_t>(m_);
  for (int r = 0; r < m_; r++, pos++)
    rows[r] = Permutation(pos / n_)[pos % n_];
  return rows;
}

TrainRecord TrainStep(TrainerState *state, const BatchPair &batch,
                      const TrainSchedule &sched, int64_t iter) {
  if (iter < 1) ThrowArgumentError("iterations count from 1");
  batch.Validate();
  Network &f = state->estimator;
  Network &h = state->critic;
  const int m = batch.size();
  if (batch.source_inputs.cols() != f.input_dim() ||
      batch.source_labels.cols() != f.output_dim())
    ThrowShapeError("batch does not match the estimator");
  const bool need_critic = sched.generator_period != kNever || sched.critic_period != kNever;
  if (need_critic && (h.NumLayers() == 0 || h.input_dim() != f.output_dim() ||
                      h.output_dim() != 1))
    ThrowShapeError("critic must map estimator outputs to one value");

  TrainRecord rec;
  rec.iteration = iter;

  // (1) coupling with f fixed
  Eigen::MatrixXd f_target = f.Evaluate(batch.target_inputs);
  CostMatrix cost = JointCost(batch, f_target, sched.joint);
  Coupling gamma = SolveCoupling(cost, sched.solver, m);
  rec.gamma_violation = gamma.MarginalViolation();

  // (2) L2 with the coupling fixed
  f.ZeroGradients();
  {
    const Eigen::MatrixXd &out = f.Forward(batch.target_inputs);
    LossAndGradient l2 = LossL2(gamma, batch, out, sched.joint);
    rec.l2 = l2.value;
    f.Backward(l2.gradient);
    AdamStep(&f, &state->estimator_opt);
  }

  // (3) source regression
  if (Fires(sched.source_period, iter)) {
    const Eigen::MatrixXd &out = f.Forward(batch.source_inputs);
    LossAndGradient l1 = LossL1(out, batch.source_labels);
    rec.l1 = l1.value;
    f.Backward(l1.gradient);
    AdamStep(&f, &state->estimator_opt);
  }

  // (4) generator step through the critic; the critic only routes gradient
  if (Fires(sched.generator_period, iter)) {
    const Eigen::MatrixXd &out = f.Forward(batch.target_inputs);
    const Eigen::MatrixXd &score = h.Forward(out);
    GeneratorLoss lf = LossGenerator(score.col(0));
    rec.lf = lf.value;
    Eigen::MatrixXd grad_out = h.Backward(lf.gradient, ParamGradients::kSkip);
    f.Backward(grad_out);
    AdamStep(&f, &state->estimator_opt);
  }

  // (5) critic ascent on L_h, i.e. descent on -L_h, then clipping
  if (Fires(sched.critic_period, iter)) {
    Eigen::MatrixXd fake = f.Evaluate(batch.target_inputs);
    CriticLoss lh = LossCritic(h.Evaluate(batch.source_labels).col(0),
                               h.Evaluate(fake).col(0));
    rec.lh = lh.value;
    h.ZeroGradients();
    h.Forward(batch.source_labels);
    h.Backward(-lh.grad_source);
    h.Forward(fake);
    h.Backward(-lh.grad_target);
    AdamStep(&h, &state->critic_opt);
    ClipParameters(&h, sched.clip);
  }
  return rec;
}

namespace {

template <typename StepFn>
void RunLoop(TrainerState *state, const TrainSchedule &sched,
             const TrainHooks &hooks, StepFn step) {
  using Clock = std::chrono::steady_clock;
  for (int64_t iter = state->iteration + 1; iter <= sched.iterations; iter++) {
    auto t0 = Clock::now();
    TrainRecord rec = step(iter);
    rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    state->log.records.push_back(rec);
    state->iteration = iter;
    if (hooks.evaluate && ShouldEvaluate(sched, iter))
      state->log.evals.push_back(hooks.evaluate(state->estimator, iter));
    if (hooks.checkpoint && sched.checkpoint_every > 0 &&
        iter % sched.checkpoint_every == 0)
      hooks.checkpoint(*state);
  }
}

}  // namespace

void Train(TrainerState *state, const FrameDataset &source,
           const FrameDataset &target, const TrainSchedule &sched,
           const TrainHooks &hooks) {
  sched.Validate();
  CheckDatasets(*state, source, &target);
  BatchSampler source_rows(source.size(), sched.batch_size, sched.seed, 1);
  BatchSampler target_rows(target.size(), sched.batch_size, sched.seed, 2);
  RunLoop(state, sched, hooks, [&](int64_t iter) {
    std::vector<int> s = source_rows.Rows(iter), t = target_rows.Rows(iter);
    BatchPair batch{source.Inputs(s), source.Labels(s), target.Inputs(t)};
    return TrainStep(state, batch, sched, iter);
  });
}

void TrainSourceOnly(TrainerState *state, const FrameDataset &source,
                     const TrainSchedule &sched, const TrainHooks &hooks) {
  sched.Validate();
  CheckDatasets(*state, source, nullptr);
  BatchSampler source_rows(source.size(), sched.batch_size, sched.seed, 1);
  Network &f = state->estimator;
  RunLoop(state, sched, hooks, [&](int64_t iter) {
    std::vector<int> s = source_rows.Rows(iter);
    TrainRecord rec;
    rec.iteration = iter;
    f.ZeroGradients();
    const Eigen::MatrixXd &out = f.Forward(source.Inputs(s));
    LossAndGradient l1 = LossL1(out, source.Labels(s));
    rec.l1 = l1.value;
    f.Backward(l1.gradient);
    AdamStep(&f, &state->estimator_opt);
    return rec;
  });
}

double DatasetMse(const Network &net, const FrameDataset &data, int chunk) {
  if (data.size() == 0) ThrowArgumentError("empty dataset");
  double total = 0.0;
  std::vector<int> rows;
  for (int start = 0; start < data.size(); start += chunk) {
    int end = std::min(data.size(), start + chunk);
    rows.resize(end - start);
    std::iota(rows.begin(), rows.end(), start);
    Eigen::MatrixXd diff = net.Evaluate(data.Inputs(rows)) - data.Labels(rows);
    total += diff.squaredNorm();
  }
  return total / (static_cast<double>(data.size()) * data.output_dim());
}

}  // namespace dotn

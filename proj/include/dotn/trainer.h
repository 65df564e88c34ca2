// include/dotn/trainer.h

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


#ifndef DOTN_TRAINER_H_
#define DOTN_TRAINER_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dotn/adaptation.h"
#include "dotn/datagen.h"
#include "dotn/neural-net.h"

namespace dotn {

// Period value meaning "never run this update".
constexpr int kNever = 0;

enum class OtSolverKind { kExact, kSinkhorn };

struct OtSolverConfig {
  OtSolverKind kind = OtSolverKind::kExact;
  // Sinkhorn regularization as a fraction of the batch's largest cost, so
  // the same setting stays meaningful as the cost scale drifts in training.
  double epsilon_scale = 0.01;
  int max_iters = 100000;
  double tol = 1e-9;
};

struct TrainSchedule {
  int batch_size = 32;
  double clip = 0.01;
  int source_period = 1;     // n_s, or kNever
  int generator_period = 5;  // n_f, or kNever
  int critic_period = 1;     // n_h, or kNever
  int iterations = 10000;
  AdamConfig estimator_optimizer;
  AdamConfig critic_optimizer{1e-4, 0.5, 0.9, 1e-8};
  OtSolverConfig solver;
  JointCostParams joint;
  uint64_t seed = 1;
  int eval_every = 500;        // 0 disables periodic evaluation
  int checkpoint_every = 0;    // 0 disables mid-run checkpoints

  /// Throws a config error naming the offending field.
  void Validate() const;
};

/// True when a step with period `period` runs at iteration `iter`.
inline bool Fires(int period, int64_t iter) {
  return period != kNever && iter % period == 0;
}

/// One completed iteration. Losses are present only for the updates that
/// ran; lh is the critic objective before its ascent step.
struct TrainRecord {
  int64_t iteration = 0;
  std::optional<double> l1, l2, lh, lf, gamma_violation;
  double wall_ms = 0.0;
};

/// Periodic evaluation on held-out data.
struct EvalPoint {
  int64_t iteration = 0;
  double target_mse = 0.0;
  double source_mse = 0.0;
};

struct TrainLog {
  std::vector<TrainRecord> records;
  std::vector<EvalPoint> evals;

  /// One JSON object per line; records carry "iteration", "l1", "l2",
  /// "lh", "lf", "gamma_violation", "wall_ms" (null when absent) and
  /// evaluation lines carry "eval_iteration", "target_mse", "source_mse".
  void WriteJsonLines(std::ostream &os) const;
  static TrainLog ReadJsonLines(std::istream &is);
};

/// Everything needed to continue a run: both networks, their optimizer
/// state, the iteration counter and the log so far.
struct TrainerState {
  Network estimator;
  Network critic;
  AdamState estimator_opt;
  AdamState critic_opt;
  int64_t iteration = 0;  // completed iterations
  TrainLog log;

  static TrainerState Create(Network estimator, Network critic,
                             const TrainSchedule &sched);

  /// Directory layout: estimator.txt, critic.txt, estimator-adam.txt,
  /// critic-adam.txt, state.json and log.jsonl. Written via temporary
  /// files and renamed, so an interrupted write leaves the old copy.
  void Save(const std::string &dir) const;
  static TrainerState Load(const std::string &dir);
};

/// Stateless batch schedule: iteration i takes positions (i-1)*m .. i*m-1 of
/// an endless sequence of per-epoch permutations of 0..n-1, each keyed by
/// (seed, stream, epoch). Resuming needs nothing but the iteration number.
class BatchSampler {
 public:
  BatchSampler(int dataset_size, int batch_size, uint64_t seed,
               uint64_t stream);
  std::vector<int> Rows(int64_t iteration);

 private:
  const std::vector<int> &Permutation(int64_t epoch);
  int n_, m_;
  uint64_t seed_, stream_;
  int64_t cached_epoch_ = -1;
  std::vector<int> perm_;
};

/// One iteration of the alternating scheme, in this order: solve the
/// coupling with f fixed; Adam step of f on L2; every n_s iterations a step
/// of f on L1; every n_f iterations a step of f on the generator loss through
/// the critic; every n_h iterations an ascent step of the critic followed by
/// clipping. `iter` counts from 1.
TrainRecord TrainStep(TrainerState *state, const BatchPair &batch,
                      const TrainSchedule &sched, int64_t iter);

struct TrainHooks {
  // Called every eval_every iterations and after the last one.
  std::function<EvalPoint(const Network &estimator, int64_t iter)> evaluate;
  // Called every checkpoint_every iterations.
  std::function<void(const TrainerState &state)> checkpoint;
};

/// Runs iterations state->iteration + 1 .. sched.iterations. Throws an
/// argument error on empty datasets or dimension mismatches.
void Train(TrainerState *state, const FrameDataset &source,
           const FrameDataset &target, const TrainSchedule &sched,
           const TrainHooks &hooks = {});

/// Supervised baseline: only the L1 step on source batches, with the same
/// sampler and optimizer contract. Log records carry only l1.
void TrainSourceOnly(TrainerState *state, const FrameDataset &source,
                     const TrainSchedule &sched, const TrainHooks &hooks = {});

/// Mean squared error of the network on every frame of a labeled dataset,
/// in the dataset's (normalized) units.
double DatasetMse(const Network &net, const FrameDataset &data,
                  int chunk = 1024);

}  // namespace dotn

#endif  // DOTN_TRAINER_H_

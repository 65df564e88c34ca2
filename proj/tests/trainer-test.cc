// tests/trainer-test.cc

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


#include <filesystem>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "dotn/error.h"
#include "dotn/trainer.h"
#include "test-util.h"

namespace dotn {
namespace {

constexpr int kIn = 6;

struct Fixture {
  FrameDataset source{1, kIn}, target{1, kIn};
  Fixture() {
    std::mt19937_64 rng(4);
    // With context 1 labels are as wide as inputs, so the estimator here
    // maps kIn -> kIn and the labels are the inputs themselves.
    for (int u = 0; u < 4; u++) {
      Eigen::MatrixXd x = test::RandomMatrix(20, kIn, &rng);
      source.AddUtterance(x, x);
      target.AddUtterance(test::RandomMatrix(20, kIn, &rng) * 1.5);
    }
  }
};

TrainerState MakeState(const TrainSchedule &sched, uint64_t seed = 7) {
  return TrainerState::Create(
      Network::Create({kIn, 8, kIn}, Activation::kLeakyRelu, Activation::kLinear, seed),
      Network::Create({kIn, 5, 1}, Activation::kLeakyRelu, Activation::kLinear, seed + 1),
      sched);
}

BatchPair MakeBatch(int m, std::mt19937_64 *rng) {
  Eigen::MatrixXd xs = test::RandomMatrix(m, kIn, rng);
  return BatchPair{xs, test::RandomMatrix(m, kIn, rng), test::RandomMatrix(m, kIn, rng)};
}

TrainSchedule SmallSchedule() {
  TrainSchedule s;
  s.batch_size = 8;
  s.iterations = 12;
  s.estimator_optimizer.learning_rate = 1e-3;
  s.critic_optimizer.learning_rate = 1e-3;
  s.joint = {1.0 / kIn, 1.0 / kIn};
  s.eval_every = 0;
  return s;
}

TEST_CASE("only coupling and L2 run when every period is never") {
  TrainSchedule s = SmallSchedule();
  s.source_period = s.generator_period = s.critic_period = kNever;
  TrainerState st = MakeState(s);
  Eigen::VectorXd f0 = st.estimator.FlatParameters();
  Eigen::VectorXd h0 = st.critic.FlatParameters();
  std::mt19937_64 rng(1);
  for (int it = 1; it <= 6; it++) {
    TrainRecord r = TrainStep(&st, MakeBatch(8, &rng), s, it);
    CHECK(r.l2.has_value());
    CHECK(r.gamma_violation.has_value());
    CHECK_FALSE(r.l1.has_value());
    CHECK_FALSE(r.lf.has_value());
    CHECK_FALSE(r.lh.has_value());
  }
  CHECK(st.critic.FlatParameters() == h0);
  CHECK(st.estimator.FlatParameters() != f0);
  CHECK(st.critic_opt.step() == 0);
  CHECK(st.estimator_opt.step() == 6);
}

TEST_CASE("periods fire on multiples of the iteration index") {
  TrainSchedule s = SmallSchedule();
  s.source_period = 2;
  s.generator_period = 3;
  s.critic_period = 6;
  TrainerState st = MakeState(s);
  std::mt19937_64 rng(2);
  TrainRecord r6 = TrainStep(&st, MakeBatch(8, &rng), s, 6);
  CHECK(r6.l1.has_value());
  CHECK(r6.lf.has_value());
  CHECK(r6.lh.has_value());
  // L2 + L1 + L_f on the estimator, one ascent step on the critic.
  CHECK(st.estimator_opt.step() == 3);
  CHECK(st.critic_opt.step() == 1);
  Eigen::VectorXd h = st.critic.FlatParameters();
  TrainRecord r5 = TrainStep(&st, MakeBatch(8, &rng), s, 5);
  CHECK_FALSE(r5.l1.has_value());
  CHECK_FALSE(r5.lf.has_value());
  CHECK_FALSE(r5.lh.has_value());
  CHECK(st.critic.FlatParameters() == h);
  CHECK(Fires(4, 8));
  CHECK_FALSE(Fires(kNever, 8));
  CHECK_THROWS_AS(TrainStep(&st, MakeBatch(8, &rng), s, 0), Error);
}

TEST_CASE("zero learning rates leave parameters untouched") {
  TrainSchedule s = SmallSchedule();
  s.source_period = s.generator_period = s.critic_period = 1;
  s.estimator_optimizer.learning_rate = 0.0;
  s.critic_optimizer.learning_rate = 0.0;
  TrainerState st = MakeState(s);
  Eigen::VectorXd f0 = st.estimator.FlatParameters();
  Eigen::VectorXd h0 = st.critic.FlatParameters();
  std::mt19937_64 rng(3);
  for (int it = 1; it <= 4; it++) {
    TrainRecord r = TrainStep(&st, MakeBatch(8, &rng), s, it);
    CHECK(r.l1.has_value());
    CHECK(r.l2.has_value());
    CHECK(r.lf.has_value());
    CHECK(r.lh.has_value());
    CHECK(*r.gamma_violation <= 1e-9);
  }
  CHECK(st.estimator.FlatParameters() == f0);
  CHECK(st.critic.FlatParameters() == h0);
}

TEST_CASE("the critic stays inside the clipping box") {
  TrainSchedule s = SmallSchedule();
  s.critic_optimizer.learning_rate = 0.5;
  s.clip = 0.05;
  TrainerState st = MakeState(s);
  CHECK(st.critic.MaxAbsParameter() <= s.clip);
  std::mt19937_64 rng(4);
  for (int it = 1; it <= 10; it++) {
    TrainStep(&st, MakeBatch(8, &rng), s, it);
    CHECK(st.critic.MaxAbsParameter() <= s.clip);
  }
}

TEST_CASE("step checks batch and network shapes") {
  TrainSchedule s = SmallSchedule();
  TrainerState st = MakeState(s);
  std::mt19937_64 rng(5);
  BatchPair wrong{test::RandomMatrix(8, kIn + 1, &rng), test::RandomMatrix(8, kIn, &rng),
                  test::RandomMatrix(8, kIn + 1, &rng)};
  CHECK_THROWS_AS(TrainStep(&st, wrong, s, 1), Error);
  st.critic = Network::Create({2, 1}, Activation::kLinear, Activation::kLinear, 1);
  CHECK_THROWS_AS(TrainStep(&st, MakeBatch(8, &rng), s, 1), Error);
}

TEST_CASE("sinkhorn coupling is accepted and logged") {
  TrainSchedule s = SmallSchedule();
  s.solver.kind = OtSolverKind::kSinkhorn;
  s.solver.epsilon_scale = 0.05;
  s.solver.tol = 1e-9;
  TrainerState st = MakeState(s);
  std::mt19937_64 rng(6);
  TrainRecord r = TrainStep(&st, MakeBatch(8, &rng), s, 1);
  CHECK(*r.gamma_violation <= 1e-9);
}

TEST_CASE("sampler visits every row once per epoch and is stateless") {
  BatchSampler a(10, 4, 9, 1), b(10, 4, 9, 1);
  std::vector<int> seen;
  for (int it = 1; it <= 5; it++) {
    std::vector<int> r = a.Rows(it);
    seen.insert(seen.end(), r.begin(), r.end());
  }
  for (int epoch = 0; epoch < 2; epoch++) {
    std::set<int> s(seen.begin() + 10 * epoch, seen.begin() + 10 * epoch + 10);
    CHECK(s.size() == 10u);
  }
  CHECK(b.Rows(4) == a.Rows(4));
  CHECK(BatchSampler(10, 4, 9, 2).Rows(1) != a.Rows(1));
  CHECK_THROWS_AS(BatchSampler(0, 4, 9, 1), Error);
}

TEST_CASE("train runs the requested iterations deterministically") {
  Fixture fx;
  TrainSchedule s = SmallSchedule();
  s.iterations = 1;
  TrainerState one = MakeState(s);
  Train(&one, fx.source, fx.target, s);
  CHECK(one.log.records.size() == 1u);
  CHECK(one.iteration == 1);

  s.iterations = 12;
  s.eval_every = 5;
  int evals = 0;
  TrainHooks hooks;
  hooks.evaluate = [&](const Network &, int64_t it) {
    evals++;
    return EvalPoint{it, 0.0, 0.0};
  };
  TrainerState a = MakeState(s), b = MakeState(s);
  Train(&a, fx.source, fx.target, s, hooks);
  Train(&b, fx.source, fx.target, s);
  CHECK(evals == 3);  // 5, 10 and the final iteration
  CHECK(a.estimator.FlatParameters() == b.estimator.FlatParameters());
  CHECK(a.critic.FlatParameters() == b.critic.FlatParameters());
  REQUIRE(a.log.records.size() == 12u);
  for (size_t i = 0; i < 12; i++) {
    CHECK(a.log.records[i].iteration == static_cast<int64_t>(i + 1));
    CHECK(*a.log.records[i].l2 == *b.log.records[i].l2);
    CHECK(a.log.records[i].lh == b.log.records[i].lh);
  }

  s.seed = 99;
  TrainerState c = MakeState(s);
  Train(&c, fx.source, fx.target, s);
  CHECK(c.estimator.FlatParameters() != a.estimator.FlatParameters());

  FrameDataset empty(1, kIn);
  try {
    Train(&c, fx.source, empty, s);
    FAIL("empty target accepted");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kArgument);
  }
}

TEST_CASE("resuming from a checkpoint matches an uninterrupted run") {
  Fixture fx;
  TrainSchedule s = SmallSchedule();
  s.iterations = 10;
  s.checkpoint_every = 4;
  std::string dir = (std::filesystem::temp_directory_path() / "dotn-trainer-test").string();
  std::filesystem::remove_all(dir);
  TrainerState full = MakeState(s);
  Train(&full, fx.source, fx.target, s);

  TrainerState partial = MakeState(s);
  TrainSchedule first = s;
  first.iterations = 4;
  TrainHooks hooks;
  hooks.checkpoint = [&](const TrainerState &st) { st.Save(dir); };
  Train(&partial, fx.source, fx.target, first, hooks);
  TrainerState resumed = TrainerState::Load(dir);
  CHECK(resumed.iteration == 4);
  Train(&resumed, fx.source, fx.target, s);
  CHECK(resumed.estimator.FlatParameters() == full.estimator.FlatParameters());
  CHECK(resumed.critic.FlatParameters() == full.critic.FlatParameters());
  CHECK(resumed.estimator_opt.step() == full.estimator_opt.step());
  REQUIRE(resumed.log.records.size() == 10u);
  CHECK(*resumed.log.records[9].l2 == *full.log.records[9].l2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("train log round-trips through json lines") {
  TrainLog log;
  TrainRecord r;
  r.iteration = 3;
  r.l2 = 0.1 + 1e-17;
  r.lh = -2.5;
  r.gamma_violation = 0.0;
  r.wall_ms = 1.25;
  log.records.push_back(r);
  log.evals.push_back({3, 0.5, 0.25});
  std::stringstream ss;
  log.WriteJsonLines(ss);
  CHECK(ss.str().find("\"l1\":null") != std::string::npos);
  TrainLog back = TrainLog::ReadJsonLines(ss);
  REQUIRE(back.records.size() == 1u);
  CHECK(back.records[0].iteration == 3);
  CHECK(*back.records[0].l2 == *r.l2);
  CHECK_FALSE(back.records[0].l1.has_value());
  CHECK(*back.records[0].lh == -2.5);
  REQUIRE(back.evals.size() == 1u);
  CHECK(back.evals[0].source_mse == 0.25);
  std::stringstream bad("{\"iteration\": }\n");
  CHECK_THROWS_AS(TrainLog::ReadJsonLines(bad), Error);
}

TEST_CASE("source-only training touches only the estimator") {
  Fixture fx;
  TrainSchedule s = SmallSchedule();
  s.estimator_optimizer.learning_rate = 0.0;
  TrainerState st = TrainerState::Create(
      Network::Create({kIn, 4, kIn}, Activation::kRelu, Activation::kLinear, 3), Network(), s);
  Eigen::VectorXd f0 = st.estimator.FlatParameters();
  TrainSourceOnly(&st, fx.source, s);
  CHECK(st.estimator.FlatParameters() == f0);
  REQUIRE(st.log.records.size() == static_cast<size_t>(s.iterations));
  for (const TrainRecord &r : st.log.records) {
    CHECK(r.l1.has_value());
    CHECK_FALSE(r.l2.has_value());
    CHECK_FALSE(r.lh.has_value());
    CHECK_FALSE(r.lf.has_value());
    CHECK_FALSE(r.gamma_violation.has_value());
  }
}

TEST_CASE("source-only training solves a linear least-squares task") {
  std::mt19937_64 rng(31);
  const int d_in = 4, n = 256;
  Eigen::MatrixXd a = test::RandomMatrix(d_in, d_in, &rng);
  Eigen::RowVectorXd b = test::RandomMatrix(1, d_in, &rng);
  Eigen::MatrixXd x = test::RandomMatrix(n, d_in, &rng);
  Eigen::MatrixXd y = (x * a).rowwise() + b;
  FrameDataset ds(1, d_in);
  ds.AddUtterance(x, y);

  // Closed-form optimum of the affine fit; the data are exactly affine so
  // its residual is zero up to rounding.
  Eigen::MatrixXd xa(n, d_in + 1);
  xa << x, Eigen::VectorXd::Ones(n);
  Eigen::MatrixXd w = xa.colPivHouseholderQr().solve(y);
  double optimum = (xa * w - y).squaredNorm() / (n * d_in);
  CHECK(optimum < 1e-20);

  TrainSchedule s;
  s.batch_size = 32;
  s.iterations = 5000;
  s.estimator_optimizer.learning_rate = 1e-2;
  TrainerState st = TrainerState::Create(
      Network::Create({d_in, d_in}, Activation::kLinear, Activation::kLinear, 5), Network(), s);
  TrainSourceOnly(&st, ds, s);
  double mse = DatasetMse(st.estimator, ds);
  CHECK(mse <= 1e-3);
  // The learned map approaches the least-squares solution.
  CHECK((st.estimator.layer(0).weight - w.topRows(d_in)).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("schedule validation names the field") {
  TrainSchedule s;
  s.batch_size = 0;
  try {
    s.Validate();
    FAIL("accepted");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kConfig);
    CHECK(std::string(e.what()).find("batch_size") != std::string::npos);
  }
  s = TrainSchedule();
  s.clip = 0.0;
  CHECK_THROWS_AS(s.Validate(), Error);
  s = TrainSchedule();
  s.source_period = -1;
  CHECK_THROWS_AS(s.Validate(), Error);
  s = TrainSchedule();
  s.joint.alpha = 0.0;
  CHECK_THROWS_AS(s.Validate(), Error);
  CHECK_NOTHROW(TrainSchedule().Validate());
}

}  // namespace
}  // namespace dotn

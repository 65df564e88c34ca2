// tests/ot-core-test.cc

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

#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "dotn/error.h"
#include "dotn/ot-core.h"
#include "test-util.h"

namespace dotn {
namespace {

Histogram RandomHistogram(int n, std::mt19937_64 *rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> w(n);
  double s = 0.0;
  for (double &x : w) s += (x = u(*rng));
  for (double &x : w) x /= s;
  return Histogram(w);
}

Coupling UniformPlan(int n) {
  return Coupling{Eigen::MatrixXd::Identity(n, n) / n, Histogram::Uniform(n),
                  Histogram::Uniform(n)};
}

// Independent optimality certificate: a feasible flow is optimal iff the
// residual graph (forward arcs always, backward arcs where flow > 0) has no
// negative cycle. Bellman-Ford from a virtual root.
bool HasNegativeResidualCycle(const Eigen::MatrixXd &c,
                              const Eigen::MatrixXd &plan) {
  const int n = c.rows(), k = c.cols(), v = n + k;
  std::vector<double> d(v, 0.0);
  for (int round = 0; round < v; round++) {
    bool changed = false;
    for (int i = 0; i < n; i++)
      for (int j = 0; j < k; j++) {
        if (d[i] + c(i, j) < d[n + j] - 1e-12) {
          d[n + j] = d[i] + c(i, j);
          changed = true;
        }
        if (plan(i, j) > 1e-12 && d[n + j] - c(i, j) < d[i] - 1e-12) {
          d[i] = d[n + j] - c(i, j);
          changed = true;
        }
      }
    if (!changed) return false;
  }
  return true;
}

TEST_CASE("frobenius cost") {
  CostMatrix zero(Eigen::MatrixXd::Zero(2, 2));
  CHECK(FrobeniusCost(zero, UniformPlan(2)) == 0.0);

  Eigen::MatrixXd c(2, 2);
  c << 0, 1, 1, 0;
  CHECK(FrobeniusCost(CostMatrix(c), UniformPlan(2)) == 0.0);

  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> cost_dist(0, 9);
  for (int trial = 0; trial < 20; trial++) {
    Eigen::MatrixXd cm(4, 4);
    for (int i = 0; i < 4; i++)
      for (int j = 0; j < 4; j++) cm(i, j) = cost_dist(rng);
    CostMatrix cost(cm);
    Coupling g = SolveOtExact(CostMatrix(test::RandomMatrix(4, 4, &rng).cwiseAbs()),
                              RandomHistogram(4, &rng), RandomHistogram(4, &rng));
    double expected = 0.0;
    for (int i = 0; i < 4; i++)
      for (int j = 0; j < 4; j++) expected += cm(i, j) * g.plan(i, j);
    CHECK(FrobeniusCost(cost, g) == doctest::Approx(expected).epsilon(1e-14));
  }

  CHECK_THROWS_AS(FrobeniusCost(CostMatrix(Eigen::MatrixXd::Zero(2, 3)),
                                UniformPlan(2)),
                  Error);
}

TEST_CASE("histogram validation and renormalization") {
  Histogram h({0.5, 0.5 + 5e-7});
  CHECK(h[0] + h[1] == doctest::Approx(1.0).epsilon(1e-15));
  try {
    Histogram bad({0.5, 0.6});
    FAIL("expected marginal error");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kMarginal);
  }
  CHECK_THROWS_AS(Histogram({1.5, -0.5}), Error);
  CHECK_THROWS_AS(Histogram(std::vector<double>{}), Error);
  CHECK_THROWS_AS(CostMatrix((Eigen::MatrixXd(1, 2) << 1, -1).finished()), Error);
}

TEST_CASE("exact solver small cases") {
  Eigen::MatrixXd one(1, 1);
  one << 7.5;
  Coupling g = SolveOtExact(CostMatrix(one), Histogram({1.0}), Histogram({1.0}));
  CHECK(g.plan(0, 0) == doctest::Approx(1.0));

  Eigen::MatrixXd c(2, 2);
  c << 0, 1, 1, 0;
  g = SolveOtExact(CostMatrix(c), Histogram::Uniform(2), Histogram::Uniform(2));
  CHECK(FrobeniusCost(CostMatrix(c), g) == doctest::Approx(0.0));
  CHECK(g.plan(0, 0) == doctest::Approx(0.5));
  CHECK(g.plan(1, 1) == doctest::Approx(0.5));

  CHECK_THROWS_AS(SolveOtExact(CostMatrix(c), Histogram::Uniform(3),
                               Histogram::Uniform(2)),
                  Error);
}

TEST_CASE("exact solver matches permutation enumeration") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> cost_dist(0, 9);
  for (int n = 1; n <= 5; n++) {
    for (int trial = 0; trial < 40; trial++) {
      Eigen::MatrixXd cm(n, n);
      for (int i = 0; i < n; i++)
        for (int j = 0; j < n; j++) cm(i, j) = cost_dist(rng);
      CostMatrix cost(cm);
      Coupling g = SolveOtExact(cost, Histogram::Uniform(n), Histogram::Uniform(n));
      CHECK(g.MarginalViolation() <= 1e-12);
      CHECK((g.plan.array() >= 0.0).all());
      CHECK(std::abs(FrobeniusCost(cost, g) - test::BruteForceAssignment(cm)) <= 1e-9);
    }
  }
}

TEST_CASE("exact solver general marginals are optimal") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; trial++) {
    int n = 2 + trial % 6, k = 2 + (trial * 7) % 5;
    Eigen::MatrixXd cm = test::RandomMatrix(n, k, &rng).cwiseAbs() * 3.0;
    Histogram mu = RandomHistogram(n, &rng), nu = RandomHistogram(k, &rng);
    Coupling g = SolveOtExact(CostMatrix(cm), mu, nu);
    CHECK(g.MarginalViolation() <= 1e-12);
    CHECK_FALSE(HasNegativeResidualCycle(cm, g.plan));
  }

  // 2x2 with general marginals: the feasible set is a segment in plan(0,0).
  for (int trial = 0; trial < 50; trial++) {
    Eigen::MatrixXd cm = test::RandomMatrix(2, 2, &rng).cwiseAbs();
    Histogram mu = RandomHistogram(2, &rng), nu = RandomHistogram(2, &rng);
    auto cost_at = [&](double t) {
      return cm(0, 0) * t + cm(0, 1) * (mu[0] - t) + cm(1, 0) * (nu[0] - t) +
             cm(1, 1) * (mu[1] - nu[0] + t);
    };
    double lo = std::max(0.0, mu[0] - nu[1]), hi = std::min(mu[0], nu[0]);
    double best = std::min(cost_at(lo), cost_at(hi));
    Coupling g = SolveOtExact(CostMatrix(cm), mu, nu);
    CHECK(FrobeniusCost(CostMatrix(cm), g) == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("exact solver symmetry and permutation equivariance") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 30; trial++) {
    const int n = 6;
    Eigen::MatrixXd pts = test::RandomMatrix(n, 2, &rng);
    Eigen::MatrixXd cm(n, n);
    for (int i = 0; i < n; i++)
      for (int j = 0; j < n; j++) cm(i, j) = (pts.row(i) - pts.row(j)).norm();
    Histogram mu = RandomHistogram(n, &rng), nu = RandomHistogram(n, &rng);
    CostMatrix cost(cm);
    double forward = FrobeniusCost(cost, SolveOtExact(cost, mu, nu));
    double backward = FrobeniusCost(cost, SolveOtExact(cost, nu, mu));
    CHECK(forward == doctest::Approx(backward).epsilon(1e-12));

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::MatrixXd permuted(n, n);
    std::vector<double> mu_perm(n);
    for (int i = 0; i < n; i++) {
      permuted.row(i) = cm.row(perm[i]);
      mu_perm[i] = mu[perm[i]];
    }
    CostMatrix pcost(permuted);
    Coupling pg = SolveOtExact(pcost, Histogram(mu_perm), nu);
    CHECK(FrobeniusCost(pcost, pg) == doctest::Approx(forward).epsilon(1e-12));
    // Rows of the permuted plan, mapped back, are again an optimal plan.
    Eigen::MatrixXd unpermuted(n, n);
    for (int i = 0; i < n; i++) unpermuted.row(perm[i]) = pg.plan.row(i);
    Coupling back{unpermuted, mu, nu};
    CHECK(back.MarginalViolation() <= 1e-12);
    CHECK(FrobeniusCost(cost, back) == doctest::Approx(forward).epsilon(1e-12));
  }
}

TEST_CASE("sinkhorn basics") {
  Eigen::MatrixXd one(1, 1);
  one << 3.0;
  for (double eps : {10.0, 1.0, 1e-3}) {
    SinkhornResult r =
        SolveSinkhorn(CostMatrix(one), Histogram({1.0}), Histogram({1.0}), {eps});
    CHECK(r.converged);
    CHECK(r.coupling.plan(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  }

  Eigen::MatrixXd c(2, 2);
  c << 0, 1, 1, 0;
  SinkhornResult r = SolveSinkhorn(CostMatrix(c), Histogram::Uniform(2),
                                   Histogram::Uniform(2), {0.01});
  CHECK(r.converged);
  CHECK(r.violation <= 1e-6);
  // Exact optimum is 0; the entropic bias at this temperature is ~e^-100.
  CHECK(FrobeniusCost(CostMatrix(c), r.coupling) <= 1e-12);

  CHECK_THROWS_AS(SolveSinkhorn(CostMatrix(c), Histogram::Uniform(2),
                                Histogram::Uniform(2), {0.0}),
                  Error);
  SinkhornOptions bad{1.0, 0, 1e-9};
  CHECK_THROWS_AS(SolveSinkhorn(CostMatrix(c), Histogram::Uniform(2),
                                Histogram::Uniform(2), bad),
                  Error);
}

TEST_CASE("sinkhorn reports non-convergence") {
  std::mt19937_64 rng(3);
  Eigen::MatrixXd cm = test::RandomMatrix(6, 6, &rng).cwiseAbs() * 10.0;
  SinkhornOptions opts{1e-3, 1, 1e-14};
  SinkhornResult r = SolveSinkhorn(CostMatrix(cm), Histogram::Uniform(6),
                                   Histogram::Uniform(6), opts);
  CHECK_FALSE(r.converged);
  CHECK(r.violation > opts.tol);
  CHECK(r.iterations == 1);
}

TEST_CASE("sinkhorn cost sandwich and monotone epsilon sweep") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> cost_dist(0, 9);
  for (int trial = 0; trial < 10; trial++) {
    Eigen::MatrixXd cm(8, 8);
    for (int i = 0; i < 8; i++)
      for (int j = 0; j < 8; j++) cm(i, j) = cost_dist(rng);
    CostMatrix cost(cm);
    Histogram u = Histogram::Uniform(8);
    double exact = FrobeniusCost(cost, SolveOtExact(cost, u, u));
    double previous = std::numeric_limits<double>::infinity();
    for (double scale : {1.0, 0.1, 0.01}) {
      SinkhornResult r = SolveSinkhorn(cost, u, u, {scale * cost.MaxValue()});
      double value = FrobeniusCost(cost, r.coupling);
      CHECK(r.violation <= 1e-6);
      CHECK(value >= exact - 1e-12);
      CHECK(value <= previous + 1e-12);
      previous = value;
    }
    CHECK((previous - exact) <= 0.02 * exact + 1e-12);
  }
}

}  // namespace
}  // namespace dotn

// src/ot-core.cc

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

#include "dotn/ot-core.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dotn/error.h"

namespace dotn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Residual amounts below this are treated as exhausted by the exact solver.
constexpr double kFlowEpsilon = 1e-15;

[[noreturn]] void ThrowMarginalError(const std::string &msg) {
  throw Error(ErrorKind::kMarginal, msg);
}

void CheckDims(const CostMatrix &cost, const Histogram &mu,
               const Histogram &nu) {
  if (cost.rows() != mu.size() || cost.cols() != nu.size()) {
    std::ostringstream os;
    os << "cost matrix is " << cost.rows() << "x" << cost.cols()
       << " but marginals have sizes " << mu.size() << " and " << nu.size();
    ThrowShapeError(os.str());
  }
}

}  // namespace

Histogram::Histogram(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) ThrowMarginalError("histogram must be nonempty");
  double sum = 0.0;
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0)
      ThrowMarginalError("histogram weights must be finite and nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "histogram sums to " << sum << ", which is not within "
       << kSumTolerance << " of 1";
    ThrowMarginalError(os.str());
  }
  if (sum != 1.0)
    for (double &w : weights_) w /= sum;
}

Histogram Histogram::Uniform(int size) {
  if (size <= 0) ThrowMarginalError("histogram must be nonempty");
  return Histogram(std::vector<double>(size, 1.0 / size));
}

CostMatrix::CostMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (values_.size() == 0) ThrowShapeError("cost matrix must be nonempty");
  if (!values_.allFinite())
    ThrowArgumentError("cost matrix entries must be finite");
  if ((values_.array() < 0.0).any())
    ThrowArgumentError("cost matrix entries must be nonnegative");
}

double CostMatrix::MaxValue() const { return values_.maxCoeff(); }

double Coupling::MarginalViolation() const {
  double worst = 0.0;
  for (int i = 0; i < plan.rows(); i++)
    worst = std::max(worst, std::abs(plan.row(i).sum() - row_marginal[i]));
  for (int j = 0; j < plan.cols(); j++)
    worst = std::max(worst, std::abs(plan.col(j).sum() - col_marginal[j]));
  return worst;
}

void CheckCouplingFeasible(const Coupling &coupling, int rows, int cols,
                           double tol) {
  const Eigen::MatrixXd &plan = coupling.plan;
  if (plan.rows() != rows || plan.cols() != cols ||
      coupling.row_marginal.size() != rows ||
      coupling.col_marginal.size() != cols) {
    std::ostringstream os;
    os << "coupling is " << plan.rows() << "x" << plan.cols()
       << ", expected " << rows << "x" << cols;
    throw Error(ErrorKind::kCoupling, os.str());
  }
  if (!plan.allFinite() || (plan.array() < 0.0).any())
    throw Error(ErrorKind::kCoupling, "coupling has negative or non-finite mass");
  double violation = coupling.MarginalViolation();
  if (violation > tol) {
    std::ostringstream os;
    os << "coupling violates its marginals by " << violation;
    throw Error(ErrorKind::kCoupling, os.str());
  }
}

double FrobeniusCost(const CostMatrix &cost, const Coupling &coupling) {
  if (cost.rows() != coupling.plan.rows() ||
      cost.cols() != coupling.plan.cols()) {
    std::ostringstream os;
    os << "cost is " << cost.rows() << "x" << cost.cols() << " but plan is "
       << coupling.plan.rows() << "x" << coupling.plan.cols();
    ThrowShapeError(os.str());
  }
  return cost.values().cwiseProduct(coupling.plan).sum();
}

Coupling SolveOtExact(const CostMatrix &cost, const Histogram &mu,
                      const Histogram &nu) {
  CheckDims(cost, mu, nu);
  const int n = mu.size(), k = nu.size();
  const Eigen::MatrixXd &c = cost.values();

  // Node layout: 0 = super source, 1..n = rows, n+1..n+k = columns,
  // n+k+1 = super sink.
  const int num_nodes = n + k + 2, source = 0, sink = n + k + 1;
  auto row_node = [](int i) { return 1 + i; };
  auto col_node = [n](int j) { return 1 + n + j; };

  Eigen::MatrixXd flow = Eigen::MatrixXd::Zero(n, k);
  std::vector<double> supply(mu.weights()), demand(nu.weights());
  std::vector<double> dual(num_nodes, 0.0), dist(num_nodes);
  std::vector<int> prev(num_nodes);
  std::vector<char> visited(num_nodes);

  auto remaining = [&]() {
    double s = 0.0;
    for (double x : supply) s += x;
    return s;
  };

  while (remaining() > kFlowEpsilon) {
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(prev.begin(), prev.end(), -1);
    std::fill(visited.begin(), visited.end(), 0);
    dist[source] = 0.0;

    // Dense Dijkstra over the residual graph with reduced costs
    // cost(u, v) - dual[v] + dual[u], which stay nonnegative.
    auto relax = [&](int u, int v, double arc_cost) {
      double reduced = std::max(0.0, arc_cost - dual[v] + dual[u]);
      if (dist[u] + reduced < dist[v]) {
        dist[v] = dist[u] + reduced;
        prev[v] = u;
      }
    };
    while (true) {
      int u = -1;
      double best = kInf;
      for (int v = 0; v < num_nodes; v++)
        if (!visited[v] && dist[v] < best) {
          best = dist[v];
          u = v;
        }
      if (u < 0) break;
      visited[u] = 1;
      if (u == sink) break;
      if (u == source) {
        for (int i = 0; i < n; i++)
          if (supply[i] > kFlowEpsilon) relax(u, row_node(i), 0.0);
      } else if (u <= n) {
        int i = u - 1;
        for (int j = 0; j < k; j++) relax(u, col_node(j), c(i, j));
      } else {
        int j = u - 1 - n;
        for (int i = 0; i < n; i++)
          if (flow(i, j) > kFlowEpsilon) relax(u, row_node(i), -c(i, j));
        if (demand[j] > kFlowEpsilon) relax(u, sink, 0.0);
      }
    }
    if (!visited[sink]) break;  // only rounding residue is left
    for (int v = 0; v < num_nodes; v++)
      if (visited[v]) dual[v] -= dist[sink] - dist[v];

    // Bottleneck along sink <- col <- row <- ... <- row <- source.
    double amount = kInf;
    for (int v = sink; v != source; v = prev[v]) {
      int u = prev[v];
      if (u == source) {
        amount = std::min(amount, supply[v - 1]);
      } else if (v == sink) {
        amount = std::min(amount, demand[u - 1 - n]);
      } else if (u > n) {  // backward arc col -> row cancels flow
        amount = std::min(amount, flow(v - 1, u - 1 - n));
      }
    }
    for (int v = sink; v != source; v = prev[v]) {
      int u = prev[v];
      if (u == source) {
        supply[v - 1] -= amount;
      } else if (v == sink) {
        demand[u - 1 - n] -= amount;
      } else if (u > n) {
        flow(v - 1, u - 1 - n) -= amount;
      } else {
        flow(u - 1, v - 1 - n) += amount;
      }
    }
  }
  flow = flow.cwiseMax(0.0);
  return Coupling{std::move(flow), mu, nu};
}

namespace {

// One full Sinkhorn sweep in the log domain at temperature eps. `f` and `g`
// are the dual potentials; row potentials are updated first so that after
// the sweep the column marginals hold exactly.
void SinkhornSweep(const Eigen::MatrixXd &c, const std::vector<double> &log_mu,
                   const std::vector<double> &log_nu, double eps,
                   Eigen::VectorXd *f, Eigen::VectorXd *g) {
  const int n = c.rows(), k = c.cols();
  for (int i = 0; i < n; i++) {
    if (!std::isfinite(log_mu[i])) {
      (*f)(i) = -kInf;
      continue;
    }
    double mx = -kInf;
    for (int j = 0; j < k; j++) mx = std::max(mx, ((*g)(j) - c(i, j)) / eps);
    double acc = 0.0;
    for (int j = 0; j < k; j++) {
      double z = ((*g)(j) - c(i, j)) / eps;
      if (z > -kInf) acc += std::exp(z - mx);
    }
    (*f)(i) = eps * (log_mu[i] - (mx + std::log(acc)));
  }
  for (int j = 0; j < k; j++) {
    if (!std::isfinite(log_nu[j])) {
      (*g)(j) = -kInf;
      continue;
    }
    double mx = -kInf;
    for (int i = 0; i < n; i++) mx = std::max(mx, ((*f)(i) - c(i, j)) / eps);
    double acc = 0.0;
    for (int i = 0; i < n; i++) {
      double z = ((*f)(i) - c(i, j)) / eps;
      if (z > -kInf) acc += std::exp(z - mx);
    }
    (*g)(j) = eps * (log_nu[j] - (mx + std::log(acc)));
  }
}

Eigen::MatrixXd PlanFromPotentials(const Eigen::MatrixXd &c,
                                   const Eigen::VectorXd &f,
                                   const Eigen::VectorXd &g, double eps) {
  Eigen::MatrixXd plan(c.rows(), c.cols());
  for (int j = 0; j < c.cols(); j++)
    for (int i = 0; i < c.rows(); i++) {
      double z = f(i) + g(j);
      plan(i, j) = std::isfinite(z) ? std::exp((z - c(i, j)) / eps) : 0.0;
    }
  return plan;
}

double RowViolation(const Eigen::MatrixXd &plan, const Histogram &mu) {
  double worst = 0.0;
  for (int i = 0; i < plan.rows(); i++)
    worst = std::max(worst, std::abs(plan.row(i).sum() - mu[i]));
  return worst;
}

}  // namespace

SinkhornResult SolveSinkhorn(const CostMatrix &cost, const Histogram &mu,
                             const Histogram &nu,
                             const SinkhornOptions &opts) {
  CheckDims(cost, mu, nu);
  if (!(opts.epsilon > 0.0))
    ThrowArgumentError("sinkhorn epsilon must be positive");
  if (opts.max_iters < 1)
    ThrowArgumentError("sinkhorn max_iters must be at least 1");

  const Eigen::MatrixXd &c = cost.values();
  std::vector<double> log_mu(mu.size()), log_nu(nu.size());
  for (int i = 0; i < mu.size(); i++) log_mu[i] = std::log(mu[i]);
  for (int j = 0; j < nu.size(); j++) log_nu[j] = std::log(nu[j]);

  Eigen::VectorXd f = Eigen::VectorXd::Zero(mu.size());
  Eigen::VectorXd g = Eigen::VectorXd::Zero(nu.size());

  SinkhornResult result;
  int iters = 0;

  // Annealing: halve the temperature from max(C) down to epsilon, with a
  // few sweeps at each stage to carry the potentials along.
  constexpr int kSweepsPerStage = 10;
  double eps = std::max(opts.epsilon, cost.MaxValue());
  while (eps > opts.epsilon && iters < opts.max_iters) {
    for (int s = 0; s < kSweepsPerStage && iters < opts.max_iters; s++) {
      SinkhornSweep(c, log_mu, log_nu, eps, &f, &g);
      iters++;
    }
    eps = std::max(opts.epsilon, 0.5 * eps);
  }

  Eigen::MatrixXd plan;
  double violation = kInf;
  while (iters < opts.max_iters) {
    SinkhornSweep(c, log_mu, log_nu, opts.epsilon, &f, &g);
    iters++;
    plan = PlanFromPotentials(c, f, g, opts.epsilon);
    violation = RowViolation(plan, mu);
    if (violation <= opts.tol) break;
  }
  if (plan.size() == 0) {
    plan = PlanFromPotentials(c, f, g, opts.epsilon);
    violation = RowViolation(plan, mu);
  }
  result.coupling = Coupling{std::move(plan), mu, nu};
  result.iterations = iters;
  result.violation = result.coupling.MarginalViolation();
  result.converged = result.violation <= opts.tol;
  return result;
}

}  // namespace dotn

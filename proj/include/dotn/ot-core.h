// include/dotn/ot-core.h

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

#ifndef DOTN_OT_CORE_H_
#define DOTN_OT_CORE_H_

#include <vector>

#include <Eigen/Dense>

namespace dotn {

// Discrete optimal transport: given two histograms and a nonnegative cost
// matrix, find the coupling (transport plan) with the prescribed marginals
// that minimizes the Frobenius product <C, gamma>.

/// A probability vector. Construction validates that every weight is finite
/// and nonnegative; sums within 1e-6 of one are renormalized, anything
/// further off is rejected with a marginal error.
class Histogram {
 public:
  static constexpr double kSumTolerance = 1e-6;

  Histogram() = default;
  explicit Histogram(std::vector<double> weights);

  static Histogram Uniform(int size);

  int size() const { return static_cast<int>(weights_.size()); }
  double operator[](int i) const { return weights_[i]; }
  const std::vector<double> &weights() const { return weights_; }

 private:
  std::vector<double> weights_;
};

/// Dense nonnegative, finite cost matrix; rows index the first
/// distribution's support and columns the second's.
class CostMatrix {
 public:
  CostMatrix() = default;
  explicit CostMatrix(Eigen::MatrixXd values);

  int rows() const { return static_cast<int>(values_.rows()); }
  int cols() const { return static_cast<int>(values_.cols()); }
  double operator()(int i, int j) const { return values_(i, j); }
  const Eigen::MatrixXd &values() const { return values_; }
  double MaxValue() const;

 private:
  Eigen::MatrixXd values_;
};

struct Coupling {
  Eigen::MatrixXd plan;
  Histogram row_marginal;
  Histogram col_marginal;

  /// Largest absolute deviation of any row or column sum of the plan from
  /// its marginal.
  double MarginalViolation() const;
};

/// Throws a coupling error unless the plan has the given shape, is
/// nonnegative, and matches its marginals to within `tol` per entry.
void CheckCouplingFeasible(const Coupling &coupling, int rows, int cols,
                           double tol = 1e-6);

/// Sum over i, j of C(i, j) * plan(i, j).
double FrobeniusCost(const CostMatrix &cost, const Coupling &coupling);

/// Exact solution of the transport LP by successive shortest augmenting
/// paths (Dijkstra with reduced costs) over the bipartite transport graph.
/// Any optimal plan may be returned when the optimum is degenerate.
Coupling SolveOtExact(const CostMatrix &cost, const Histogram &mu,
                      const Histogram &nu);

struct SinkhornOptions {
  double epsilon = 0.0;  // absolute regularization strength, > 0
  int max_iters = 100000;
  double tol = 1e-9;     // target marginal violation
};

struct SinkhornResult {
  Coupling coupling;
  int iterations = 0;
  double violation = 0.0;
  // False when max_iters ran out before `violation` reached `tol`; the plan
  // is still returned so the caller can decide whether it is usable.
  bool converged = false;
};

/// Entropy-regularized transport solved with log-domain Sinkhorn updates.
/// The iteration starts from a large temperature and anneals down to
/// `epsilon`, which does not change the fixed point but avoids the very
/// slow start of plain Sinkhorn when epsilon is small relative to C.
SinkhornResult SolveSinkhorn(const CostMatrix &cost, const Histogram &mu,
                             const Histogram &nu,
                             const SinkhornOptions &opts);

}  // namespace dotn

#endif  // DOTN_OT_CORE_H_

// include/dotn/adaptation.h

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

#ifndef DOTN_ADAPTATION_H_
#define DOTN_ADAPTATION_H_

#include <Eigen/Dense>

#include "dotn/ot-core.h"

namespace dotn {

// The adaptation objective. For a minibatch of m labelled source samples
// (xs, ys) and m unlabelled target inputs xt, with estimator outputs
// f(xt) and critic h:
//
//   L1 = (1/m) sum_i |ys_i - f(xs_i)|^2                    (source fit)
//   L2 = sum_ij gamma_ij C_ij                               (joint OT)
//   C_ij = alpha |xs_i - xt_j|^2 + beta |ys_i - f(xt_j)|^2
//   Lh = (1/m) sum_i [h(ys_i) - h(f(xt_i))]                 (critic)
//   Lf = -(1/m) sum_i h(f(xt_i))                            (generator)
//
// Every loss returns its value together with the gradient with respect to
// the network outputs it depends on; chaining into parameters is done by
// Network::Backward().

struct JointCostParams {
  double alpha = 1.0;  // weight on the input distance
  double beta = 1.0;   // weight on the label distance

  /// Throws an argument error unless both weights are positive and finite.
  void Validate() const;
};

/// One minibatch: m source inputs and labels, m target inputs.
struct BatchPair {
  Eigen::MatrixXd source_inputs;  // m x d_in
  Eigen::MatrixXd source_labels;  // m x d_out
  Eigen::MatrixXd target_inputs;  // m x d_in

  int size() const { return static_cast<int>(source_inputs.rows()); }
  /// Throws a shape error if row counts differ or feature widths disagree,
  /// and an argument error on non-finite entries.
  void Validate() const;
};

struct LossAndGradient {
  double value = 0.0;
  Eigen::MatrixXd gradient;  // same shape as the differentiated outputs
};

struct CriticLoss {
  double value = 0.0;
  Eigen::VectorXd grad_source;  // d value / d h(ys_i)
  Eigen::VectorXd grad_target;  // d value / d h(f(xt_i))
};

/// Pairwise squared distances |a_i - b_j|^2.
Eigen::MatrixXd SquaredDistances(const Eigen::MatrixXd &a,
                                 const Eigen::MatrixXd &b);

CostMatrix JointCost(const BatchPair &batch,
                     const Eigen::MatrixXd &f_target_outputs,
                     const JointCostParams &params);

LossAndGradient LossL1(const Eigen::MatrixXd &source_outputs,
                       const Eigen::MatrixXd &source_labels);

/// Gradient is with respect to f_target_outputs. The alpha term is part of
/// the value but does not depend on f, so it only shapes gamma. Throws a
/// coupling error if gamma is not a feasible m x m plan.
LossAndGradient LossL2(const Coupling &gamma, const BatchPair &batch,
                       const Eigen::MatrixXd &f_target_outputs,
                       const JointCostParams &params);

/// Critic objective, which the trainer ascends.
CriticLoss LossCritic(const Eigen::VectorXd &critic_on_source_labels,
                      const Eigen::VectorXd &critic_on_f_target_outputs);

struct GeneratorLoss {
  double value = 0.0;
  Eigen::VectorXd gradient;  // d value / d h(f(xt_i)), all -1/m
};

GeneratorLoss LossGenerator(const Eigen::VectorXd &critic_on_f_target_outputs);

/// Empirical dual objective E[h(y)] - E[h(f(x))]. Same number as
/// LossCritic().value; kept separate for monitoring.
double WganValue(const Eigen::VectorXd &critic_on_source_labels,
                 const Eigen::VectorXd &critic_on_f_target_outputs);

}  // namespace dotn

#endif  // DOTN_ADAPTATION_H_

// src/adaptation.cc

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

#include "dotn/adaptation.h"

#include <cmath>
#include <sstream>

#include "dotn/error.h"

namespace dotn {

namespace {

std::string ShapeString(const Eigen::MatrixXd &m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void CheckSameShape(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b,
                    const char *what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    ThrowShapeError(std::string(what) + ": " + ShapeString(a) + " vs " +
                    ShapeString(b));
}

void CheckTargetOutputs(const BatchPair &batch, const Eigen::MatrixXd &out) {
  if (out.rows() != batch.size() || out.cols() != batch.source_labels.cols())
    ThrowShapeError("target outputs are " + ShapeString(out) +
                    ", expected " + std::to_string(batch.size()) + "x" +
                    std::to_string(batch.source_labels.cols()));
}

void CheckEqualLength(const Eigen::VectorXd &a, const Eigen::VectorXd &b) {
  if (a.size() != b.size() || a.size() == 0)
    ThrowShapeError("critic output vectors must be nonempty and of equal "
                    "length");
}

}  // namespace

void JointCostParams::Validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) ||
      !std::isfinite(beta))
    ThrowArgumentError("alpha and beta must be positive and finite");
}

void BatchPair::Validate() const {
  const auto m = source_inputs.rows();
  if (m == 0) ThrowShapeError("batch is empty");
  if (source_labels.rows() != m || target_inputs.rows() != m)
    ThrowShapeError("batch members have different row counts");
  if (target_inputs.cols() != source_inputs.cols())
    ThrowShapeError("source and target inputs have different widths");
  if (!source_inputs.allFinite() || !source_labels.allFinite() ||
      !target_inputs.allFinite())
    ThrowArgumentError("batch contains non-finite values");
}

Eigen::MatrixXd SquaredDistances(const Eigen::MatrixXd &a,
                                 const Eigen::MatrixXd &b) {
  if (a.cols() != b.cols())
    ThrowShapeError("point sets have different dimensions");
  Eigen::MatrixXd d(a.rows(), b.rows());
  for (int j = 0; j < b.rows(); j++)
    for (int i = 0; i < a.rows(); i++)
      d(i, j) = (a.row(i) - b.row(j)).squaredNorm();
  return d;
}

CostMatrix JointCost(const BatchPair &batch,
                     const Eigen::MatrixXd &f_target_outputs,
                     const JointCostParams &params) {
  batch.Validate();
  params.Validate();
  CheckTargetOutputs(batch, f_target_outputs);
  Eigen::MatrixXd c =
      params.alpha * SquaredDistances(batch.source_inputs, batch.target_inputs) +
      params.beta * SquaredDistances(batch.source_labels, f_target_outputs);
  return CostMatrix(std::move(c));
}

LossAndGradient LossL1(const Eigen::MatrixXd &source_outputs,
                       const Eigen::MatrixXd &source_labels) {
  CheckSameShape(source_outputs, source_labels, "L1 outputs vs labels");
  if (source_outputs.rows() == 0) ThrowShapeError("L1 on an empty batch");
  const double n = static_cast<double>(source_outputs.rows());
  Eigen::MatrixXd diff = source_outputs - source_labels;
  return {diff.squaredNorm() / n, (2.0 / n) * diff};
}

LossAndGradient LossL2(const Coupling &gamma, const BatchPair &batch,
                       const Eigen::MatrixXd &f_target_outputs,
                       const JointCostParams &params) {
  batch.Validate();
  params.Validate();
  CheckTargetOutputs(batch, f_target_outputs);
  const int m = batch.size();
  CheckCouplingFeasible(gamma, m, m);

  CostMatrix cost = JointCost(batch, f_target_outputs, params);
  double value = FrobeniusCost(cost, gamma);

  // d/d f_j of beta sum_i gamma_ij |ys_i - f_j|^2
  //   = 2 beta (colmass_j f_j - sum_i gamma_ij ys_i).
  const Eigen::MatrixXd &g = gamma.plan;
  Eigen::VectorXd col_mass = g.colwise().sum().transpose();
  Eigen::MatrixXd grad = 2.0 * params.beta *
                         (col_mass.asDiagonal() * f_target_outputs -
                          g.transpose() * batch.source_labels);
  return {value, std::move(grad)};
}

CriticLoss LossCritic(const Eigen::VectorXd &critic_on_source_labels,
                      const Eigen::VectorXd &critic_on_f_target_outputs) {
  CheckEqualLength(critic_on_source_labels, critic_on_f_target_outputs);
  const double m = static_cast<double>(critic_on_source_labels.size());
  CriticLoss out;
  out.value = (critic_on_source_labels - critic_on_f_target_outputs).sum() / m;
  out.grad_source = Eigen::VectorXd::Constant(critic_on_source_labels.size(), 1.0 / m);
  out.grad_target = Eigen::VectorXd::Constant(critic_on_source_labels.size(), -1.0 / m);
  return out;
}

GeneratorLoss LossGenerator(const Eigen::VectorXd &critic_on_f_target_outputs) {
  if (critic_on_f_target_outputs.size() == 0)
    ThrowShapeError("generator loss on an empty batch");
  const double m = static_cast<double>(critic_on_f_target_outputs.size());
  return {-critic_on_f_target_outputs.sum() / m,
          Eigen::VectorXd::Constant(critic_on_f_target_outputs.size(), -1.0 / m)};
}

double WganValue(const Eigen::VectorXd &critic_on_source_labels,
                 const Eigen::VectorXd &critic_on_f_target_outputs) {
  return LossCritic(critic_on_source_labels, critic_on_f_target_outputs).value;
}

}  // namespace dotn

// tests/test-util.h

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

// Oracles shared by the unit and acceptance tests. Nothing here calls into
// the library code paths it is used to check.

#ifndef DOTN_TESTS_TEST_UTIL_H_
#define DOTN_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace dotn {
namespace test {

inline Eigen::MatrixXd RandomMatrix(int rows, int cols, std::mt19937_64 *rng,
                                    double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; j++)
    for (int i = 0; i < rows; i++) m(i, j) = u(*rng);
  return m;
}

/// Minimum of (1/n) sum_i C(i, perm(i)) over all n! permutations. For
/// uniform marginals the vertices of the transport polytope are the scaled
/// permutation matrices, so this is the exact OT optimum.
inline double BruteForceAssignment(const Eigen::MatrixXd &c) {
  const int n = c.rows();
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (int i = 0; i < n; i++) s += c(i, perm[i]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / n;
}

/// Central finite differences of a scalar function of a flat vector.
inline Eigen::VectorXd NumericGradient(
    const std::function<double(const Eigen::VectorXd &)> &fn,
    const Eigen::VectorXd &at, double step = 1e-5) {
  Eigen::VectorXd grad(at.size());
  Eigen::VectorXd x = at;
  for (int i = 0; i < at.size(); i++) {
    double orig = x(i);
    x(i) = orig + step;
    double plus = fn(x);
    x(i) = orig - step;
    double minus = fn(x);
    x(i) = orig;
    grad(i) = (plus - minus) / (2.0 * step);
  }
  return grad;
}

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor). The floor keeps entries
/// that are zero up to rounding from dominating the ratio.
inline double MaxRelativeError(const Eigen::VectorXd &a,
                               const Eigen::VectorXd &b,
                               double floor = 1e-6) {
  double worst = 0.0;
  for (int i = 0; i < a.size(); i++) {
    double denom = std::max({std::abs(a(i)), std::abs(b(i)), floor});
    worst = std::max(worst, std::abs(a(i) - b(i)) / denom);
  }
  return worst;
}

/// Power meter: 10 log10 of clean power over the power of (noisy - clean),
/// accumulated in long double.
template <typename T>
double MeasuredSnrDb(const std::vector<T> &clean, const std::vector<T> &noisy) {
  long double pc = 0.0L, pn = 0.0L;
  for (size_t i = 0; i < clean.size(); i++) {
    long double c = clean[i], d = static_cast<long double>(noisy[i]) - c;
    pc += c * c;
    pn += d * d;
  }
  return static_cast<double>(10.0L * std::log10(pc / pn));
}

/// Log-spectral distance by plain loops: per frame, the RMS over bins of
/// the dB difference 20 log10(e) (ln a - ln b), then the mean over frames.
inline double ScalarLoopLsd(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b) {
  const double db = 20.0 / std::log(10.0);
  double total = 0.0;
  for (int t = 0; t < a.rows(); t++) {
    double sq = 0.0;
    for (int k = 0; k < a.cols(); k++) {
      double d = db * (a(t, k) - b(t, k));
      sq += d * d;
    }
    total += std::sqrt(sq / a.cols());
  }
  return total / a.rows();
}

}  // namespace test
}  // namespace dotn

#endif  // DOTN_TESTS_TEST_UTIL_H_

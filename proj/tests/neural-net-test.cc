// tests/neural-net-test.cc

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

#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "dotn/error.h"
#include "dotn/neural-net.h"
#include "test-util.h"

namespace dotn {
namespace {

// Scalar-loop forward pass written independently of the Eigen code path.
Eigen::MatrixXd LoopForward(const Network &net, const Eigen::MatrixXd &batch) {
  Eigen::MatrixXd x = batch;
  for (int k = 0; k < net.NumLayers(); k++) {
    const Layer &l = net.layer(k);
    Eigen::MatrixXd y(x.rows(), l.output_dim());
    for (int r = 0; r < x.rows(); r++)
      for (int o = 0; o < l.output_dim(); o++) {
        double s = l.bias(o);
        for (int i = 0; i < l.input_dim(); i++) s += x(r, i) * l.weight(i, o);
        if (l.activation == Activation::kRelu && s < 0) s = 0;
        if (l.activation == Activation::kLeakyRelu && s < 0) s *= kLeakySlope;
        y(r, o) = s;
      }
    x = y;
  }
  return x;
}

TEST_CASE("forward special cases") {
  Layer id{Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3),
           Activation::kLinear};
  Network net({id});
  std::mt19937_64 rng(1);
  Eigen::MatrixXd x = test::RandomMatrix(4, 3, &rng);
  CHECK(net.Forward(x) == x);

  Eigen::VectorXd b(2);
  b << 0.25, -1.5;
  Network bias_only({Layer{Eigen::MatrixXd::Zero(3, 2), b, Activation::kLinear}});
  Eigen::MatrixXd out = bias_only.Evaluate(x);
  for (int r = 0; r < out.rows(); r++) CHECK(out.row(r).transpose() == b);

  CHECK_THROWS_AS(net.Forward(test::RandomMatrix(2, 4, &rng)), Error);
}

TEST_CASE("forward matches scalar loop") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; trial++) {
    Network net = Network::Create({5, 7, 3}, trial % 2 ? Activation::kRelu
                                                       : Activation::kLeakyRelu,
                                  Activation::kLinear, 100 + trial);
    Eigen::MatrixXd x = test::RandomMatrix(6, 5, &rng, 2.0);
    Eigen::MatrixXd diff = net.Forward(x) - LoopForward(net, x);
    CHECK(diff.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((net.Evaluate(x) - LoopForward(net, x)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("layer chaining is validated") {
  Layer a{Eigen::MatrixXd::Zero(3, 4), Eigen::VectorXd::Zero(4), Activation::kRelu};
  Layer b{Eigen::MatrixXd::Zero(5, 2), Eigen::VectorXd::Zero(2), Activation::kLinear};
  CHECK_THROWS_AS(Network({a, b}), Error);
}

TEST_CASE("backward closed forms") {
  std::mt19937_64 rng(3);
  Network net = Network::Create({4, 3}, Activation::kLinear, Activation::kLinear, 7);
  Eigen::MatrixXd x = test::RandomMatrix(5, 4, &rng);
  net.Forward(x);
  net.Backward(Eigen::MatrixXd::Ones(5, 3));
  Eigen::VectorXd col_sums = x.colwise().sum().transpose();
  for (int o = 0; o < 3; o++)
    CHECK((net.grad(0).weight.col(o) - col_sums).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((net.grad(0).bias.array() == 5.0).all());

  Network deep = Network::Create({4, 6, 2}, Activation::kRelu, Activation::kLinear, 8);
  deep.Forward(x);
  Eigen::MatrixXd dx = deep.Backward(Eigen::MatrixXd::Zero(5, 2));
  CHECK(deep.FlatGradients().cwiseAbs().maxCoeff() == 0.0);
  CHECK(dx.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backward before forward is a state error") {
  Network net = Network::Create({2, 2}, Activation::kRelu, Activation::kLinear, 1);
  try {
    net.Backward(Eigen::MatrixXd::Zero(1, 2));
    FAIL("expected state error");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kState);
  }
}

TEST_CASE("backward matches finite differences") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; trial++) {
    std::uniform_int_distribution<int> dim(2, 8);
    int in = dim(rng), hidden = dim(rng), out = dim(rng);
    Network net = Network::Create({in, hidden, out},
                                  trial % 2 ? Activation::kRelu
                                            : Activation::kLeakyRelu,
                                  Activation::kLinear, 50 + trial);
    Eigen::MatrixXd x = test::RandomMatrix(4, in, &rng);
    Eigen::MatrixXd weights = test::RandomMatrix(4, out, &rng);
    // Loss: sum(weights .* out^2) / 2, so d loss / d out = weights .* out.
    auto loss = [&](const Eigen::VectorXd &p) {
      Network copy = net;
      copy.SetFlatParameters(p);
      Eigen::MatrixXd y = copy.Evaluate(x);
      return 0.5 * weights.cwiseProduct(y.cwiseProduct(y)).sum();
    };
    const Eigen::MatrixXd &y = net.Forward(x);
    net.Backward(weights.cwiseProduct(y));
    Eigen::VectorXd numeric = test::NumericGradient(loss, net.FlatParameters());
    CHECK(test::MaxRelativeError(net.FlatGradients(), numeric) <= 1e-4);
  }
}

TEST_CASE("input gradient matches finite differences") {
  std::mt19937_64 rng(5);
  Network net = Network::Create({3, 5, 2}, Activation::kLeakyRelu,
                                Activation::kLinear, 9);
  Eigen::MatrixXd x = test::RandomMatrix(3, 3, &rng);
  net.Forward(x);
  Eigen::MatrixXd dx = net.Backward(Eigen::MatrixXd::Ones(3, 2), ParamGradients::kSkip);
  CHECK(net.FlatGradients().cwiseAbs().maxCoeff() == 0.0);
  auto loss = [&](const Eigen::VectorXd &flat) {
    Eigen::MatrixXd xx = Eigen::Map<const Eigen::MatrixXd>(flat.data(), 3, 3);
    return net.Evaluate(xx).sum();
  };
  Eigen::VectorXd numeric = test::NumericGradient(
      loss, Eigen::Map<const Eigen::VectorXd>(x.data(), x.size()));
  Eigen::VectorXd analytic = Eigen::Map<const Eigen::VectorXd>(dx.data(), dx.size());
  CHECK(test::MaxRelativeError(analytic, numeric) <= 1e-4);
}

// Reference scalar Adam recurrence.
struct ScalarAdam {
  double lr, b1, b2, eps, m = 0, v = 0;
  int t = 0;
  double Step(double theta, double g) {
    t++;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    double mh = m / (1 - std::pow(b1, t)), vh = v / (1 - std::pow(b2, t));
    return theta - lr * mh / (std::sqrt(vh) + eps);
  }
};

Network ScalarNet(double w) {
  Eigen::MatrixXd wm(1, 1);
  wm << w;
  return Network({Layer{wm, Eigen::VectorXd::Zero(1), Activation::kLinear}});
}

void SetScalarGradient(Network *net, double g) {
  // d/dw of g * w * x with x = 1 is g; the bias also receives g.
  Eigen::MatrixXd x(1, 1);
  x << 1.0;
  net->Forward(x);
  Eigen::MatrixXd up(1, 1);
  up << g;
  net->Backward(up);
}

TEST_CASE("adam first step and recurrence") {
  AdamConfig cfg{1e-3, 0.9, 0.999, 1e-8};
  Network net = ScalarNet(0.5);
  AdamState state(net, cfg);
  SetScalarGradient(&net, 0.3);
  AdamStep(&net, &state);
  // Bias-corrected first step moves by lr * |g| / (|g| + eps_hat).
  double expected_move = 1e-3 * 0.3 / (0.3 + 1e-8);
  CHECK(std::abs(0.5 - net.layer(0).weight(0, 0) - expected_move) <= 1e-15);
  CHECK(state.step() == 1);
  CHECK(net.FlatGradients().cwiseAbs().maxCoeff() == 0.0);

  Network net3 = ScalarNet(-0.2);
  AdamState s3(net3, cfg);
  ScalarAdam ref{1e-3, 0.9, 0.999, 1e-8};
  double theta = -0.2;
  for (int i = 0; i < 3; i++) {
    SetScalarGradient(&net3, 0.7);
    AdamStep(&net3, &s3);
    theta = ref.Step(theta, 0.7);
    CHECK(std::abs(net3.layer(0).weight(0, 0) - theta) <= 1e-12);
    CHECK(s3.step() == i + 1);
  }
}

TEST_CASE("adam with zero gradients") {
  Network net = Network::Create({3, 2}, Activation::kLinear, Activation::kLinear, 4);
  Eigen::VectorXd before = net.FlatParameters();
  AdamState state(net, AdamConfig{});
  AdamStep(&net, &state);
  CHECK(net.FlatParameters() == before);
  CHECK(state.step() == 1);
}

TEST_CASE("adam moments decay under zero gradient") {
  Network net = ScalarNet(1.0);
  AdamState state(net, AdamConfig{1e-3, 0.9, 0.999, 1e-8});
  SetScalarGradient(&net, 2.0);
  AdamStep(&net, &state);
  double m1 = state.first_moment()[0].weight(0, 0);
  double v1 = state.second_moment()[0].weight(0, 0);
  AdamStep(&net, &state);
  CHECK(state.first_moment()[0].weight(0, 0) == doctest::Approx(0.9 * m1));
  CHECK(state.second_moment()[0].weight(0, 0) == doctest::Approx(0.999 * v1));
  CHECK(state.second_moment()[0].weight(0, 0) >= 0.0);
}

TEST_CASE("clipping") {
  Network net = ScalarNet(0.0);
  net.layer(0).weight(0, 0) = 0.02;
  net.layer(0).bias(0) = -0.03;
  ClipParameters(&net, 0.01);
  CHECK(net.layer(0).weight(0, 0) == 0.01);
  CHECK(net.layer(0).bias(0) == -0.01);

  Network small = Network::Create({4, 3}, Activation::kRelu, Activation::kLinear, 2);
  ClipParameters(&small, 10.0);
  Eigen::VectorXd before = small.FlatParameters();
  ClipParameters(&small, 10.0);
  CHECK(small.FlatParameters() == before);

  Network big = Network::Create({6, 8, 1}, Activation::kLeakyRelu,
                                Activation::kLinear, 3);
  ClipParameters(&big, 0.01);
  Eigen::VectorXd p = big.FlatParameters();
  for (int i = 0; i < p.size(); i++) CHECK(std::abs(p(i)) <= 0.01);
  ClipParameters(&big, 0.01);
  CHECK(big.FlatParameters() == p);

  CHECK_THROWS_AS(ClipParameters(&big, 0.0), Error);
  CHECK_THROWS_AS(ClipParameters(&big, -1.0), Error);
}

TEST_CASE("seeded initialization is reproducible and bounded") {
  Network a = Network::Create({16, 8, 2}, Activation::kRelu, Activation::kLinear, 42);
  Network b = Network::Create({16, 8, 2}, Activation::kRelu, Activation::kLinear, 42);
  CHECK(a.FlatParameters() == b.FlatParameters());
  CHECK(a.layer(0).weight.cwiseAbs().maxCoeff() <= 0.25);
  CHECK(a.layer(1).weight.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(8.0));
}

TEST_CASE("checkpoint round trip is exact") {
  Network net = Network::Create({5, 4, 3}, Activation::kLeakyRelu,
                                Activation::kLinear, 77);
  std::stringstream ss;
  net.Write(ss);
  Network back = Network::Read(ss);
  CHECK(back.FlatParameters() == net.FlatParameters());
  CHECK(back.layer(0).activation == Activation::kLeakyRelu);

  AdamState state(net, AdamConfig{2e-4, 0.5, 0.9, 1e-8});
  net.Forward(Eigen::MatrixXd::Ones(2, 5));
  net.Backward(Eigen::MatrixXd::Ones(2, 3));
  AdamStep(&net, &state);
  std::stringstream ss2;
  state.Write(ss2);
  AdamState s2 = AdamState::Read(ss2);
  CHECK(s2.step() == 1);
  CHECK(s2.config().beta1 == 0.5);
  CHECK(s2.first_moment()[1].weight == state.first_moment()[1].weight);

  std::stringstream bad("dotn-network 99\n");
  CHECK_THROWS_AS(Network::Read(bad), Error);
}

}  // namespace
}  // namespace dotn

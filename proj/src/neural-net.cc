// src/neural-net.cc

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

#include "dotn/neural-net.h"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "dotn/error.h"

namespace dotn {

namespace {

constexpr const char *kNetworkMagic = "dotn-network";
constexpr const char *kAdamMagic = "dotn-adam";
constexpr int kFormatVersion = 1;

void ApplyActivation(Activation act, Eigen::MatrixXd *z) {
  switch (act) {
    case Activation::kLinear: break;
    case Activation::kRelu: *z = z->cwiseMax(0.0); break;
    case Activation::kLeakyRelu:
      *z = z->unaryExpr([](double v) { return v > 0.0 ? v : kLeakySlope * v; });
      break;
  }
}

// Multiplies `grad` in place by act'(pre).
void ApplyActivationDerivative(Activation act, const Eigen::MatrixXd &pre,
                               Eigen::MatrixXd *grad) {
  switch (act) {
    case Activation::kLinear: break;
    case Activation::kRelu:
      *grad = (pre.array() > 0.0).select(*grad, 0.0);
      break;
    case Activation::kLeakyRelu:
      *grad = (pre.array() > 0.0).select(*grad, kLeakySlope * grad->array());
      break;
  }
}

Layer ZeroLike(const Layer &l) {
  return Layer{Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
               Eigen::VectorXd::Zero(l.bias.size()), l.activation};
}

[[noreturn]] void ThrowIoError(const std::string &msg) {
  throw Error(ErrorKind::kIo, msg);
}

void ExpectToken(std::istream &is, const std::string &token) {
  std::string got;
  if (!(is >> got) || got != token)
    ThrowIoError("expected '" + token + "' but read '" + got + "'");
}

void WriteLayerValues(std::ostream &os, const Layer &l) {
  for (int r = 0; r < l.weight.rows(); r++) {
    for (int c = 0; c < l.weight.cols(); c++)
      os << (c ? " " : "") << l.weight(r, c);
    os << '\n';
  }
  for (int c = 0; c < l.bias.size(); c++) os << (c ? " " : "") << l.bias(c);
  os << '\n';
}

void ReadLayerValues(std::istream &is, Layer *l) {
  for (int r = 0; r < l->weight.rows(); r++)
    for (int c = 0; c < l->weight.cols(); c++)
      if (!(is >> l->weight(r, c))) ThrowIoError("truncated weight values");
  for (int c = 0; c < l->bias.size(); c++)
    if (!(is >> l->bias(c))) ThrowIoError("truncated bias values");
}

void WriteLayers(std::ostream &os, const std::vector<Layer> &layers) {
  os << "layers " << layers.size() << '\n';
  for (const Layer &l : layers) {
    os << "layer " << l.input_dim() << ' ' << l.output_dim() << ' '
       << ActivationName(l.activation) << '\n';
    WriteLayerValues(os, l);
  }
}

std::vector<Layer> ReadLayers(std::istream &is) {
  ExpectToken(is, "layers");
  int num_layers = 0;
  if (!(is >> num_layers) || num_layers < 1) ThrowIoError("bad layer count");
  std::vector<Layer> layers(num_layers);
  for (Layer &l : layers) {
    ExpectToken(is, "layer");
    int in = 0, out = 0;
    std::string act;
    if (!(is >> in >> out >> act) || in < 1 || out < 1)
      ThrowIoError("bad layer header");
    l.weight.resize(in, out);
    l.bias.resize(out);
    l.activation = ActivationFromName(act);
    ReadLayerValues(is, &l);
  }
  return layers;
}

}  // namespace

const char *ActivationName(Activation act) {
  switch (act) {
    case Activation::kLinear: return "linear";
    case Activation::kRelu: return "relu";
    case Activation::kLeakyRelu: return "leaky_relu";
  }
  return "unknown";
}

Activation ActivationFromName(const std::string &name) {
  if (name == "linear") return Activation::kLinear;
  if (name == "relu") return Activation::kRelu;
  if (name == "leaky_relu") return Activation::kLeakyRelu;
  ThrowArgumentError("unknown activation '" + name + "'");
}

Network Network::Create(const std::vector<int> &dims, Activation hidden,
                        Activation output, uint64_t seed) {
  if (dims.size() < 2) ThrowArgumentError("a network needs at least one layer");
  std::mt19937_64 rng(seed);
  std::vector<Layer> layers;
  for (size_t k = 0; k + 1 < dims.size(); k++) {
    if (dims[k] < 1 || dims[k + 1] < 1)
      ThrowArgumentError("layer dimensions must be positive");
    double bound = 1.0 / std::sqrt(static_cast<double>(dims[k]));
    std::uniform_real_distribution<double> u(-bound, bound);
    Layer l;
    l.weight.resize(dims[k], dims[k + 1]);
    l.bias.resize(dims[k + 1]);
    for (int c = 0; c < l.weight.cols(); c++)
      for (int r = 0; r < l.weight.rows(); r++) l.weight(r, c) = u(rng);
    for (int c = 0; c < l.bias.size(); c++) l.bias(c) = u(rng);
    l.activation = (k + 2 == dims.size()) ? output : hidden;
    layers.push_back(std::move(l));
  }
  return Network(std::move(layers));
}

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) ThrowArgumentError("a network needs at least one layer");
  for (size_t k = 0; k < layers_.size(); k++) {
    const Layer &l = layers_[k];
    if (l.bias.size() != l.weight.cols())
      ThrowShapeError("bias length does not match layer output dimension");
    if (k > 0 && layers_[k - 1].output_dim() != l.input_dim()) {
      std::ostringstream os;
      os << "layer " << k - 1 << " outputs " << layers_[k - 1].output_dim()
         << " values but layer " << k << " expects " << l.input_dim();
      ThrowShapeError(os.str());
    }
  }
  for (const Layer &l : layers_) grads_.push_back(ZeroLike(l));
}

int Network::input_dim() const { return layers_.front().input_dim(); }
int Network::output_dim() const { return layers_.back().output_dim(); }

int Network::NumParameters() const {
  int n = 0;
  for (const Layer &l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

void Network::CheckInput(const Eigen::MatrixXd &batch) const {
  if (layers_.empty()) throw Error(ErrorKind::kState, "network has no layers");
  if (batch.cols() != input_dim()) {
    std::ostringstream os;
    os << "batch has " << batch.cols() << " features but the network expects "
       << input_dim();
    ThrowShapeError(os.str());
  }
}

const Eigen::MatrixXd &Network::Forward(const Eigen::MatrixXd &batch) {
  CheckInput(batch);
  inputs_.resize(layers_.size());
  pre_.resize(layers_.size());
  Eigen::MatrixXd x = batch;
  for (size_t k = 0; k < layers_.size(); k++) {
    const Layer &l = layers_[k];
    inputs_[k] = std::move(x);
    pre_[k] = inputs_[k] * l.weight;
    pre_[k].rowwise() += l.bias.transpose();
    x = pre_[k];
    ApplyActivation(l.activation, &x);
  }
  output_ = std::move(x);
  has_cache_ = true;
  return output_;
}

Eigen::MatrixXd Network::Evaluate(const Eigen::MatrixXd &batch) const {
  CheckInput(batch);
  Eigen::MatrixXd x = batch;
  for (const Layer &l : layers_) {
    Eigen::MatrixXd z = x * l.weight;
    z.rowwise() += l.bias.transpose();
    ApplyActivation(l.activation, &z);
    x = std::move(z);
  }
  return x;
}

Eigen::MatrixXd Network::Backward(const Eigen::MatrixXd &upstream,
                                  ParamGradients mode) {
  if (!has_cache_)
    throw Error(ErrorKind::kState, "Backward() called without a cached Forward()");
  if (upstream.rows() != output_.rows() || upstream.cols() != output_.cols()) {
    std::ostringstream os;
    os << "upstream gradient is " << upstream.rows() << "x" << upstream.cols()
       << " but the cached output is " << output_.rows() << "x"
       << output_.cols();
    ThrowShapeError(os.str());
  }
  Eigen::MatrixXd grad = upstream;
  for (int k = static_cast<int>(layers_.size()) - 1; k >= 0; k--) {
    ApplyActivationDerivative(layers_[k].activation, pre_[k], &grad);
    if (mode == ParamGradients::kAccumulate) {
      grads_[k].weight.noalias() += inputs_[k].transpose() * grad;
      grads_[k].bias += grad.colwise().sum().transpose();
    }
    Eigen::MatrixXd next = grad * layers_[k].weight.transpose();
    grad = std::move(next);
  }
  return grad;
}

void Network::ZeroGradients() {
  for (Layer &g : grads_) {
    g.weight.setZero();
    g.bias.setZero();
  }
}

Eigen::VectorXd Network::FlatParameters() const {
  Eigen::VectorXd flat(NumParameters());
  int pos = 0;
  for (const Layer &l : layers_) {
    flat.segment(pos, l.weight.size()) =
        Eigen::Map<const Eigen::VectorXd>(l.weight.data(), l.weight.size());
    pos += l.weight.size();
    flat.segment(pos, l.bias.size()) = l.bias;
    pos += l.bias.size();
  }
  return flat;
}

void Network::SetFlatParameters(const Eigen::VectorXd &flat) {
  if (flat.size() != NumParameters())
    ThrowShapeError("flat parameter vector has the wrong length");
  int pos = 0;
  for (Layer &l : layers_) {
    Eigen::Map<Eigen::VectorXd>(l.weight.data(), l.weight.size()) =
        flat.segment(pos, l.weight.size());
    pos += l.weight.size();
    l.bias = flat.segment(pos, l.bias.size());
    pos += l.bias.size();
  }
}

Eigen::VectorXd Network::FlatGradients() const {
  Eigen::VectorXd flat(NumParameters());
  int pos = 0;
  for (const Layer &g : grads_) {
    flat.segment(pos, g.weight.size()) =
        Eigen::Map<const Eigen::VectorXd>(g.weight.data(), g.weight.size());
    pos += g.weight.size();
    flat.segment(pos, g.bias.size()) = g.bias;
    pos += g.bias.size();
  }
  return flat;
}

double Network::MaxAbsParameter() const {
  double m = 0.0;
  for (const Layer &l : layers_) {
    m = std::max(m, l.weight.cwiseAbs().maxCoeff());
    m = std::max(m, l.bias.cwiseAbs().maxCoeff());
  }
  return m;
}

void Network::Write(std::ostream &os) const {
  auto old_precision = os.precision(17);
  os << kNetworkMagic << ' ' << kFormatVersion << '\n';
  WriteLayers(os, layers_);
  os.precision(old_precision);
}

Network Network::Read(std::istream &is) {
  ExpectToken(is, kNetworkMagic);
  int version = 0;
  if (!(is >> version) || version != kFormatVersion)
    ThrowIoError("unsupported network format version");
  return Network(ReadLayers(is));
}

AdamState::AdamState(const Network &net, const AdamConfig &config)
    : config_(config) {
  for (int k = 0; k < net.NumLayers(); k++) {
    m_.push_back(ZeroLike(net.layer(k)));
    v_.push_back(ZeroLike(net.layer(k)));
  }
}

void AdamState::Write(std::ostream &os) const {
  auto old_precision = os.precision(17);
  os << kAdamMagic << ' ' << kFormatVersion << '\n'
     << "config " << config_.learning_rate << ' ' << config_.beta1 << ' '
     << config_.beta2 << ' ' << config_.eps_hat << '\n'
     << "step " << step_ << '\n';
  WriteLayers(os, m_);
  WriteLayers(os, v_);
  os.precision(old_precision);
}

AdamState AdamState::Read(std::istream &is) {
  ExpectToken(is, kAdamMagic);
  int version = 0;
  if (!(is >> version) || version != kFormatVersion)
    ThrowIoError("unsupported optimizer format version");
  AdamState s;
  ExpectToken(is, "config");
  if (!(is >> s.config_.learning_rate >> s.config_.beta1 >> s.config_.beta2 >>
        s.config_.eps_hat))
    ThrowIoError("bad optimizer config line");
  ExpectToken(is, "step");
  if (!(is >> s.step_) || s.step_ < 0) ThrowIoError("bad optimizer step");
  s.m_ = ReadLayers(is);
  s.v_ = ReadLayers(is);
  return s;
}

void AdamStep(Network *net, AdamState *state) {
  if (static_cast<int>(state->m_.size()) != net->NumLayers())
    ThrowShapeError("optimizer state does not match the network");
  const AdamConfig &cfg = state->config_;
  state->step_++;
  const double t = static_cast<double>(state->step_);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);

  auto update = [&](auto &param, auto &grad, auto &m, auto &v) {
    if (param.size() != m.size())
      ThrowShapeError("optimizer state does not match the network");
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    param.array() -= cfg.learning_rate * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + cfg.eps_hat);
    grad.setZero();
  };
  for (int k = 0; k < net->NumLayers(); k++) {
    Layer &p = net->layers_[k];
    Layer &g = net->grads_[k];
    update(p.weight, g.weight, state->m_[k].weight, state->v_[k].weight);
    update(p.bias, g.bias, state->m_[k].bias, state->v_[k].bias);
  }
}

void ClipParameters(Network *net, double c) {
  if (!(c > 0.0)) ThrowArgumentError("clip bound must be positive");
  for (int k = 0; k < net->NumLayers(); k++) {
    Layer &l = net->layer(k);
    l.weight = l.weight.cwiseMax(-c).cwiseMin(c);
    l.bias = l.bias.cwiseMax(-c).cwiseMin(c);
  }
}

}  // namespace dotn

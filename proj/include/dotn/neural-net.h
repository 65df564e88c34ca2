// include/dotn/neural-net.h

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

#ifndef DOTN_NEURAL_NET_H_
#define DOTN_NEURAL_NET_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dotn {

// Small feedforward networks with hand-written reverse-mode gradients.
//
// Batches are row-major in the logical sense: one sample per row. A layer
// computes act(X * W + 1 b^T) with W stored as (input_dim x output_dim) and
// b as a column vector of length output_dim.

enum class Activation { kLinear, kRelu, kLeakyRelu };

const char *ActivationName(Activation act);
Activation ActivationFromName(const std::string &name);

// Negative-side slope used by kLeakyRelu.
constexpr double kLeakySlope = 0.2;

struct Layer {
  Eigen::MatrixXd weight;  // input_dim x output_dim
  Eigen::VectorXd bias;    // output_dim
  Activation activation = Activation::kLinear;

  int input_dim() const { return static_cast<int>(weight.rows()); }
  int output_dim() const { return static_cast<int>(weight.cols()); }
};

/// Whether Backward() adds into the parameter gradient buffers. kSkip is
/// used when a network only routes a gradient to its input, e.g. the critic
/// while the estimator is being trained through it.
enum class ParamGradients { kAccumulate, kSkip };

class Network {
 public:
  Network() = default;

  /// Builds a chain with layer sizes dims[0] -> dims[1] -> ... -> dims.back().
  /// Hidden layers use `hidden`, the last layer uses `output`. Weights and
  /// biases are drawn uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static Network Create(const std::vector<int> &dims, Activation hidden,
                        Activation output, uint64_t seed);

  /// Takes ownership of explicit layers; throws a shape error unless the
  /// dimensions chain.
  explicit Network(std::vector<Layer> layers);

  int input_dim() const;
  int output_dim() const;
  int NumLayers() const { return static_cast<int>(layers_.size()); }
  int NumParameters() const;
  const Layer &layer(int i) const { return layers_[i]; }
  Layer &layer(int i) { return layers_[i]; }
  const Layer &grad(int i) const { return grads_[i]; }

  /// Forward pass that caches activations for a following Backward().
  const Eigen::MatrixXd &Forward(const Eigen::MatrixXd &batch);

  /// Forward pass with no side effects.
  Eigen::MatrixXd Evaluate(const Eigen::MatrixXd &batch) const;

  /// Reverse pass for the batch of the most recent Forward(). `upstream`
  /// holds d(loss)/d(output), one row per sample. Parameter gradients are
  /// added into the gradient buffers (unless `mode` is kSkip) and the
  /// gradient with respect to the input batch is returned. Throws a state
  /// error if no Forward() has been cached.
  Eigen::MatrixXd Backward(const Eigen::MatrixXd &upstream,
                           ParamGradients mode = ParamGradients::kAccumulate);

  void ZeroGradients();

  // Flat views, in layer order with each weight column-major and then its
  // bias. Used by tests and by the checkpoint code.
  Eigen::VectorXd FlatParameters() const;
  void SetFlatParameters(const Eigen::VectorXd &flat);
  Eigen::VectorXd FlatGradients() const;

  double MaxAbsParameter() const;

  /// Text checkpoint format; see README for the layout.
  void Write(std::ostream &os) const;
  static Network Read(std::istream &is);

 private:
  friend void AdamStep(Network *net, class AdamState *state);
  void CheckInput(const Eigen::MatrixXd &batch) const;

  std::vector<Layer> layers_;
  std::vector<Layer> grads_;  // weight/bias hold gradient buffers
  // inputs_[k] is the input to layer k, pre_[k] its pre-activation.
  std::vector<Eigen::MatrixXd> inputs_, pre_;
  Eigen::MatrixXd output_;
  bool has_cache_ = false;
};

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
};

/// First and second moment buffers for one network, shaped like its layers.
class AdamState {
 public:
  AdamState() = default;
  AdamState(const Network &net, const AdamConfig &config);

  const AdamConfig &config() const { return config_; }
  AdamConfig &config() { return config_; }
  int64_t step() const { return step_; }
  const std::vector<Layer> &first_moment() const { return m_; }
  const std::vector<Layer> &second_moment() const { return v_; }

  void Write(std::ostream &os) const;
  static AdamState Read(std::istream &is);

 private:
  friend void AdamStep(Network *net, AdamState *state);
  AdamConfig config_;
  int64_t step_ = 0;
  std::vector<Layer> m_, v_;
};

/// Bias-corrected Adam update from the current gradient buffers, which are
/// zeroed afterwards.
void AdamStep(Network *net, AdamState *state);

/// Saturates every weight and bias into [-c, c]. Throws an argument error
/// if c <= 0.
void ClipParameters(Network *net, double c);

}  // namespace dotn

#endif  // DOTN_NEURAL_NET_H_

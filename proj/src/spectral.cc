// src/spectral.cc

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

#include "dotn/spectral.h"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <sstream>

#include "dotn/error.h"

namespace dotn {

namespace {

// The FFTW planner is not re-entrant.
std::mutex planner_mutex;

// RAII holder for one real<->complex plan pair of a fixed size.
class FftPair {
 public:
  explicit FftPair(int n) : n_(n) {
    real_ = fftw_alloc_real(n);
    spec_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard<std::mutex> lock(planner_mutex);
    forward_ = fftw_plan_dft_r2c_1d(n, real_, spec_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(n, spec_, real_, FFTW_ESTIMATE);
  }
  ~FftPair() {
    std::lock_guard<std::mutex> lock(planner_mutex);
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(real_);
    fftw_free(spec_);
  }
  FftPair(const FftPair &) = delete;
  FftPair &operator=(const FftPair &) = delete;

  double *real() { return real_; }
  fftw_complex *spec() { return spec_; }
  void Forward() { fftw_execute(forward_); }
  // Unnormalized: the result is scaled by n.
  void Inverse() { fftw_execute(inverse_); }
  int size() const { return n_; }

 private:
  int n_;
  double *real_;
  fftw_complex *spec_;
  fftw_plan forward_, inverse_;
};

bool IsPowerOfTwo(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

void SpectralConfig::Validate() const {
  if (!IsPowerOfTwo(window))
    ThrowArgumentError("analysis window must be a power of two");
  if (hop < 1 || hop > window)
    ThrowArgumentError("hop must be between 1 and the window length");
  if (!(log_floor > 0.0)) ThrowArgumentError("log floor must be positive");
}

std::vector<double> AnalysisWindow(int window) {
  std::vector<double> w(window);
  for (int n = 0; n < window; n++)
    w[n] = std::sin(std::numbers::pi * (n + 0.5) / window);
  return w;
}

int NumFrames(int signal_length, const SpectralConfig &config) {
  int padded = signal_length + config.window;
  return 1 + (padded - config.window + config.hop - 1) / config.hop;
}

Spectrogram SpectralFrames(std::span<const double> signal,
                           const SpectralConfig &config) {
  config.Validate();
  const int len = static_cast<int>(signal.size());
  if (len < config.window) {
    std::ostringstream os;
    os << "signal of " << len << " samples is shorter than the "
       << config.window << "-sample window";
    ThrowArgumentError(os.str());
  }
  const int n = config.window, half = n / 2, bins = config.num_bins();
  const int frames = NumFrames(len, config);
  const std::vector<double> w = AnalysisWindow(n);

  Spectrogram out;
  out.signal_length = len;
  out.log_magnitude.resize(frames, bins);
  out.phase.resize(frames, bins);
  FftPair fft(n);
  for (int t = 0; t < frames; t++) {
    const int start = t * config.hop - half;
    for (int k = 0; k < n; k++) {
      int idx = start + k;
      fft.real()[k] = (idx >= 0 && idx < len) ? w[k] * signal[idx] : 0.0;
    }
    fft.Forward();
    for (int b = 0; b < bins; b++) {
      std::complex<double> z(fft.spec()[b][0], fft.spec()[b][1]);
      out.log_magnitude(t, b) = std::log(std::abs(z) + config.log_floor);
      out.phase(t, b) = std::arg(z);
    }
  }
  return out;
}

std::vector<double> Resynthesize(const Eigen::MatrixXd &log_magnitude,
                                 const Eigen::MatrixXd &phase,
                                 int signal_length,
                                 const SpectralConfig &config) {
  config.Validate();
  const int n = config.window, half = n / 2, bins = config.num_bins();
  if (log_magnitude.cols() != bins || phase.rows() != log_magnitude.rows() ||
      phase.cols() != bins)
    ThrowShapeError("magnitude and phase frames do not match the window");
  if (log_magnitude.rows() != NumFrames(signal_length, config))
    ThrowShapeError("frame count does not match the signal length");

  const std::vector<double> w = AnalysisWindow(n);
  std::vector<double> acc(signal_length, 0.0), norm(signal_length, 0.0);
  FftPair fft(n);
  for (int t = 0; t < log_magnitude.rows(); t++) {
    for (int b = 0; b < bins; b++) {
      double mag = std::max(0.0, std::exp(log_magnitude(t, b)) - config.log_floor);
      fft.spec()[b][0] = mag * std::cos(phase(t, b));
      fft.spec()[b][1] = mag * std::sin(phase(t, b));
    }
    // c2r assumes a Hermitian input; DC and Nyquist must be real.
    fft.spec()[0][1] = 0.0;
    fft.spec()[bins - 1][1] = 0.0;
    fft.Inverse();
    const int start = t * config.hop - half;
    for (int k = 0; k < n; k++) {
      int idx = start + k;
      if (idx < 0 || idx >= signal_length) continue;
      acc[idx] += w[k] * fft.real()[k] / n;
      norm[idx] += w[k] * w[k];
    }
  }
  for (int i = 0; i < signal_length; i++) acc[i] /= norm[i];
  return acc;
}

}  // namespace dotn

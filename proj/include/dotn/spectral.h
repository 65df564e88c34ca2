// include/dotn/spectral.h

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

#ifndef DOTN_SPECTRAL_H_
#define DOTN_SPECTRAL_H_

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace dotn {

struct SpectralConfig {
  int window = 512;  // must be a power of two
  int hop = 256;     // 1 <= hop <= window
  double log_floor = 1e-8;

  int num_bins() const { return window / 2 + 1; }
  void Validate() const;
};

/// Short-time log-magnitude spectrum with the phase kept for resynthesis.
/// The signal is zero-padded by window/2 on both sides (and up to a whole
/// number of hops on the right) so that every sample is covered by the same
/// number of frames as an interior sample.
struct Spectrogram {
  Eigen::MatrixXd log_magnitude;  // frames x bins, log(|X| + floor)
  Eigen::MatrixXd phase;          // frames x bins, radians
  int signal_length = 0;

  int num_frames() const { return static_cast<int>(log_magnitude.rows()); }
  int num_bins() const { return static_cast<int>(log_magnitude.cols()); }
};

/// Analysis/synthesis window sin(pi (n + 1/2) / N). Its square sums to one
/// at 50% overlap and it is nonzero at every tap.
std::vector<double> AnalysisWindow(int window);

int NumFrames(int signal_length, const SpectralConfig &config);

/// Throws an argument error if the signal is shorter than one window.
Spectrogram SpectralFrames(std::span<const double> signal,
                           const SpectralConfig &config);

/// Weighted overlap-add inverse, normalized by the summed squared window.
/// With the analysis phase and unmodified magnitudes it reproduces the
/// input waveform up to rounding.
std::vector<double> Resynthesize(const Eigen::MatrixXd &log_magnitude,
                                 const Eigen::MatrixXd &phase,
                                 int signal_length,
                                 const SpectralConfig &config);

}  // namespace dotn

#endif  // DOTN_SPECTRAL_H_

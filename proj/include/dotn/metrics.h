// include/dotn/metrics.h

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


#ifndef DOTN_METRICS_H_
#define DOTN_METRICS_H_

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dotn/datagen.h"
#include "dotn/neural-net.h"

namespace dotn {

constexpr double kSiSdrCapDb = 60.0;

/// Scale-invariant SDR in dB: the estimate is split into its projection on
/// the reference and a residual, and the ratio of their energies is
/// returned, clamped to [-60, 60] dB. Throws an argument error on length
/// mismatch or a zero reference.
double SiSdr(std::span<const double> reference, std::span<const double> estimate);

/// Mean over frames of the RMS log-magnitude difference, in dB. Inputs are
/// natural-log magnitudes, so the dB factor is 20 / ln(10).
double LogSpectralDistance(const Eigen::MatrixXd &reference,
                           const Eigen::MatrixXd &estimate);

/// Mean squared difference over all entries.
double FrameMse(const Eigen::MatrixXd &reference, const Eigen::MatrixXd &estimate);

struct MetricValues {
  double mse = 0.0;
  double si_sdr_db = 0.0;
  double lsd_db = 0.0;
};

struct EvalCell {
  std::string family;
  double snr_db = 0.0;
  int utterances = 0;
  MetricValues values;
};

struct FamilyAverage {
  std::string family;
  MetricValues values;  // arithmetic mean over the family's SNR cells
};

struct EvalReport {
  std::string system;
  std::vector<EvalCell> cells;  // family-major, SNR ascending
  std::vector<FamilyAverage> averages;

  const EvalCell &Cell(const std::string &family, double snr_db) const;
  const FamilyAverage &Average(const std::string &family) const;
  /// Mean of the family averages.
  MetricValues Overall() const;

  /// Columns: system,family,snr_db,utterances,mse,si_sdr_db,lsd_db. The
  /// per-family averages follow the cells with snr_db = "avg".
  void WriteCsv(std::ostream &os) const;
  void WriteJson(std::ostream &os) const;
  static EvalReport ReadJson(std::istream &is);
};

/// Maps the noisy log-magnitude frames of held-out utterance `index` to
/// enhanced log-magnitude frames of the same shape.
using Enhancer =
    std::function<Eigen::MatrixXd(const Eigen::MatrixXd &noisy_log_magnitude, int index)>;

struct EvalOptions {
  // Resynthesize with the clean phase instead of the noisy one. Only useful
  // for oracle upper bounds.
  bool use_clean_phase = false;
};

/// Scores an enhancer on every held-out utterance and aggregates by
/// (family, SNR). Every pair of `families` x `snr_grid` must have at least
/// one utterance, otherwise a config error is thrown.
EvalReport Evaluate(const std::string &system, const Enhancer &enhancer,
                    const std::vector<LabeledUtterance> &heldout,
                    const std::vector<std::string> &families,
                    const std::vector<double> &snr_grid,
                    const SpectralConfig &spectral,
                    const EvalOptions &options = {});

/// Passes the noisy frames through unchanged.
Enhancer IdentityEnhancer();
/// Returns the stored clean frames of each held-out utterance.
Enhancer OracleEnhancer(const std::vector<LabeledUtterance> &heldout,
                        const SpectralConfig &spectral);
/// Normalizes, stacks context, runs the network and undoes the output
/// normalization. The network is copied.
Enhancer NetworkEnhancer(const Network &net, const FeatureNormalizer &norm,
                         int context);

}  // namespace dotn

#endif  // DOTN_METRICS_H_

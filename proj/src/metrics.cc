// src/metrics.cc

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


#include "dotn/metrics.h"

#include <cmath>
#include <iomanip>
#include <map>
#include <memory>
#include <numbers>
#include <ostream>

#include "dotn/error.h"
#include "json.hpp"

namespace dotn {

double SiSdr(std::span<const double> reference, std::span<const double> estimate) {
  if (reference.size() != estimate.size())
    ThrowArgumentError("reference and estimate lengths differ");
  double ref_energy = 0.0, dot = 0.0;
  for (size_t i = 0; i < reference.size(); i++) {
    ref_energy += reference[i] * reference[i];
    dot += reference[i] * estimate[i];
  }
  if (!(ref_energy > 0.0)) ThrowArgumentError("reference has zero energy");
  const double scale = dot / ref_energy;
  double target = 0.0, residual = 0.0;
  for (size_t i = 0; i < reference.size(); i++) {
    double s = scale * reference[i];
    double e = estimate[i] - s;
    target += s * s;
    residual += e * e;
  }
  // A silent estimate has nothing along the reference: worst score.
  if (target == 0.0) return -kSiSdrCapDb;
  if (residual == 0.0) return kSiSdrCapDb;
  return std::clamp(10.0 * std::log10(target / residual), -kSiSdrCapDb, kSiSdrCapDb);
}

double LogSpectralDistance(const Eigen::MatrixXd &reference,
                           const Eigen::MatrixXd &estimate) {
  if (reference.rows() != estimate.rows() || reference.cols() != estimate.cols())
    ThrowShapeError("frame matrices differ in shape");
  if (reference.size() == 0) ThrowShapeError("no frames to compare");
  const double db = 20.0 / std::numbers::ln10;
  Eigen::VectorXd per_frame =
      ((reference - estimate).array().square().rowwise().mean()).sqrt();
  return db * per_frame.mean();
}

double FrameMse(const Eigen::MatrixXd &reference, const Eigen::MatrixXd &estimate) {
  if (reference.rows() != estimate.rows() || reference.cols() != estimate.cols())
    ThrowShapeError("frame matrices differ in shape");
  if (reference.size() == 0) ThrowShapeError("no frames to compare");
  return (reference - estimate).squaredNorm() / static_cast<double>(reference.size());
}

const EvalCell &EvalReport::Cell(const std::string &family, double snr_db) const {
  for (const EvalCell &c : cells)
    if (c.family == family && c.snr_db == snr_db) return c;
  ThrowArgumentError("no cell for " + family + " at " + std::to_string(snr_db) + " dB");
}

const FamilyAverage &EvalReport::Average(const std::string &family) const {
  for (const FamilyAverage &a : averages)
    if (a.family == family) return a;
  ThrowArgumentError("no average for " + family);
}

MetricValues EvalReport::Overall() const {
  if (averages.empty()) ThrowArgumentError("empty report");
  MetricValues m;
  for (const FamilyAverage &a : averages) {
    m.mse += a.values.mse;
    m.si_sdr_db += a.values.si_sdr_db;
    m.lsd_db += a.values.lsd_db;
  }
  double n = static_cast<double>(averages.size());
  m.mse /= n;
  m.si_sdr_db /= n;
  m.lsd_db /= n;
  return m;
}

void EvalReport::WriteCsv(std::ostream &os) const {
  auto old = os.precision(17);
  os << "system,family,snr_db,utterances,mse,si_sdr_db,lsd_db\n";
  for (const EvalCell &c : cells)
    os << system << ',' << c.family << ',' << c.snr_db << ',' << c.utterances << ','
       << c.values.mse << ',' << c.values.si_sdr_db << ',' << c.values.lsd_db << '\n';
  for (const FamilyAverage &a : averages) {
    int n = 0;
    for (const EvalCell &c : cells)
      if (c.family == a.family) n += c.utterances;
    os << system << ',' << a.family << ",avg," << n << ',' << a.values.mse << ','
       << a.values.si_sdr_db << ',' << a.values.lsd_db << '\n';
  }
  os.precision(old);
}

namespace {

nlohmann::ordered_json ValuesJson(const MetricValues &v) {
  nlohmann::ordered_json j;
  j["mse"] = v.mse;
  j["si_sdr_db"] = v.si_sdr_db;
  j["lsd_db"] = v.lsd_db;
  return j;
}

MetricValues ValuesFromJson(const nlohmann::json &j) {
  return {j.at("mse").get<double>(), j.at("si_sdr_db").get<double>(),
          j.at("lsd_db").get<double>()};
}

void Accumulate(MetricValues *sum, const MetricValues &v) {
  sum->mse += v.mse;
  sum->si_sdr_db += v.si_sdr_db;
  sum->lsd_db += v.lsd_db;
}

MetricValues Divide(MetricValues v, double n) {
  return {v.mse / n, v.si_sdr_db / n, v.lsd_db / n};
}

}  // namespace

void EvalReport::WriteJson(std::ostream &os) const {
  nlohmann::ordered_json j;
  j["system"] = system;
  j["cells"] = nlohmann::ordered_json::array();
  for (const EvalCell &c : cells) {
    nlohmann::ordered_json e;
    e["family"] = c.family;
    e["snr_db"] = c.snr_db;
    e["utterances"] = c.utterances;
    e.update(ValuesJson(c.values));
    j["cells"].push_back(e);
  }
  j["averages"] = nlohmann::ordered_json::array();
  for (const FamilyAverage &a : averages) {
    nlohmann::ordered_json e;
    e["family"] = a.family;
    e.update(ValuesJson(a.values));
    j["averages"].push_back(e);
  }
  os << j.dump(2) << '\n';
}

EvalReport EvalReport::ReadJson(std::istream &is) {
  EvalReport r;
  try {
    nlohmann::json j = nlohmann::json::parse(is);
    r.system = j.at("system").get<std::string>();
    for (const auto &e : j.at("cells"))
      r.cells.push_back({e.at("family").get<std::string>(), e.at("snr_db").get<double>(),
                         e.at("utterances").get<int>(), ValuesFromJson(e)});
    for (const auto &e : j.at("averages"))
      r.averages.push_back({e.at("family").get<std::string>(), ValuesFromJson(e)});
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::kIo, std::string("corrupt report: ") + e.what());
  }
  return r;
}

EvalReport Evaluate(const std::string &system, const Enhancer &enhancer,
                    const std::vector<LabeledUtterance> &heldout,
                    const std::vector<std::string> &families,
                    const std::vector<double> &snr_grid,
                    const SpectralConfig &spectral, const EvalOptions &options) {
  struct Sum {
    MetricValues values;
    int count = 0;
  };
  std::map<std::pair<std::string, double>, Sum> sums;
  for (const std::string &f : families)
    for (double s : snr_grid) sums[{f, s}];

  for (size_t i = 0; i < heldout.size(); i++) {
    const LabeledUtterance &u = heldout[i];
    auto it = sums.find({NoiseFamilyName(u.noise.family), u.snr_db});
    if (it == sums.end()) continue;
    Spectrogram noisy = Analyze(u.noisy, spectral);
    Spectrogram clean = Analyze(u.clean, spectral);
    Eigen::MatrixXd enhanced = enhancer(noisy.log_magnitude, static_cast<int>(i));
    if (enhanced.rows() != noisy.log_magnitude.rows() ||
        enhanced.cols() != noisy.log_magnitude.cols())
      ThrowShapeError("enhancer changed the frame shape");
    const Eigen::MatrixXd &phase = options.use_clean_phase ? clean.phase : noisy.phase;
    std::vector<double> wave =
        Resynthesize(enhanced, phase, static_cast<int>(u.noisy.size()), spectral);
    std::vector<double> ref = ToDouble(u.clean);
    MetricValues v{FrameMse(clean.log_magnitude, enhanced), SiSdr(ref, wave),
                   LogSpectralDistance(clean.log_magnitude, enhanced)};
    Accumulate(&it->second.values, v);
    it->second.count++;
  }

  EvalReport report;
  report.system = system;
  for (const std::string &f : families) {
    MetricValues family_sum;
    for (double s : snr_grid) {
      const Sum &sum = sums.at({f, s});
      if (sum.count == 0)
        ThrowConfigError("held-out data has no utterance for " + f + " at " +
                         std::to_string(s) + " dB");
      EvalCell cell{f, s, sum.count, Divide(sum.values, sum.count)};
      Accumulate(&family_sum, cell.values);
      report.cells.push_back(cell);
    }
    report.averages.push_back({f, Divide(family_sum, static_cast<double>(snr_grid.size()))});
  }
  return report;
}

Enhancer IdentityEnhancer() {
  return [](const Eigen::MatrixXd &noisy, int) { return noisy; };
}

Enhancer OracleEnhancer(const std::vector<LabeledUtterance> &heldout,
                        const SpectralConfig &spectral) {
  auto clean = std::make_shared<std::vector<Eigen::MatrixXd>>();
  for (const LabeledUtterance &u : heldout)
    clean->push_back(Analyze(u.clean, spectral).log_magnitude);
  return [clean](const Eigen::MatrixXd &, int index) { return clean->at(index); };
}

Enhancer NetworkEnhancer(const Network &net, const FeatureNormalizer &norm,
                         int context) {
  auto copy = std::make_shared<const Network>(net);
  return [copy, norm, context](const Eigen::MatrixXd &noisy, int) {
    Eigen::MatrixXd x = StackContext(norm.NormalizeInput(noisy), context);
    return norm.DenormalizeOutput(copy->Evaluate(x));
  };
}

}  // namespace dotn

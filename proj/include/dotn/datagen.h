// include/dotn/datagen.h

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

#ifndef DOTN_DATAGEN_H_
#define DOTN_DATAGEN_H_

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dotn/spectral.h"

namespace dotn {

// Synthetic speech-enhancement corpus: voice-like clean signals mixed with
// noise families at a grid of SNRs. Source data comes with clean labels,
// target training data does not, and the held-out splits keep their cleans
// for scoring only.

enum class CleanGenerator { kHarmonicVoice, kChirp, kFilteredPulseTrain };

enum class NoiseFamily {
  // stationary
  kPink,
  kBandLimitedWhite,
  kTonalHum,
  // nonstationary
  kAmplitudeModulatedBurst,
  kSweptTone,
  kBabbleProxy,
  kImpulsiveClicks,
};

const char *CleanGeneratorName(CleanGenerator g);
CleanGenerator CleanGeneratorFromName(const std::string &name);
const char *NoiseFamilyName(NoiseFamily f);
NoiseFamily NoiseFamilyFromName(const std::string &name);
bool IsStationary(NoiseFamily f);

/// Independent 64-bit seed for (seed, a, b) via SplitMix64 mixing, so every
/// utterance gets its own random stream regardless of generation order.
uint64_t DeriveSeed(uint64_t seed, uint64_t a, uint64_t b = 0);

struct CleanSignal {
  std::vector<double> samples;  // peak amplitude <= 1
  int sample_rate = 16000;
  CleanGenerator generator = CleanGenerator::kHarmonicVoice;
};

CleanSignal GenerateClean(CleanGenerator generator, int num_samples,
                          int sample_rate, std::mt19937_64 *rng);

struct NoiseSpec {
  NoiseFamily family = NoiseFamily::kPink;
  double band_low_hz = 0.0;
  double band_high_hz = 8000.0;
  double modulation_hz = 1.0;  // burst, sweep, syllable or click rate

  /// Throws a config error if the parameters are outside the generator's
  /// valid ranges for the given sample rate.
  void Validate(int sample_rate) const;
};

/// Parameters used for a family when the config names it without overrides.
NoiseSpec DefaultNoiseSpec(NoiseFamily family);

std::vector<double> GenerateNoise(const NoiseSpec &spec, int num_samples,
                                  int sample_rate, std::mt19937_64 *rng);

struct MixedUtterance {
  std::vector<double> noisy;
  std::vector<double> clean;
  double snr_db = 0.0;
  NoiseSpec noise;
};

/// noisy = clean + g * noise with g chosen so that the clean-to-scaled-noise
/// power ratio is snr_db. Throws an argument error on length mismatch,
/// zero-power inputs, or a non-finite SNR.
MixedUtterance MixAtSnr(const CleanSignal &clean, std::span<const double> noise,
                        double snr_db, const NoiseSpec &spec = {});

struct CorpusConfig {
  std::vector<NoiseSpec> source_noises;
  std::vector<NoiseSpec> target_noises;
  std::vector<double> snr_grid_db{-9, -6, -3, 0, 3, 6, 9};
  int source_utterances_per_cell = 4;
  int target_utterances_per_cell = 4;
  int heldout_utterances_per_cell = 2;
  int source_heldout_utterances_per_cell = 1;
  double utterance_seconds = 1.0;
  int sample_rate = 16000;
  std::vector<CleanGenerator> clean_generators{CleanGenerator::kHarmonicVoice};
  SpectralConfig spectral;
  uint64_t seed = 1;

  /// Three stationary source families and one nonstationary target family.
  static CorpusConfig Default();

  int samples_per_utterance() const;
  /// Throws a config error on overlapping source/target families, empty
  /// family lists or grids, or invalid sizes.
  void Validate() const;
};

/// Utterance with its clean reference: source training data, and held-out
/// target data where the clean is only used for scoring.
struct LabeledUtterance {
  NoiseSpec noise;
  double snr_db = 0.0;
  std::vector<float> noisy;
  std::vector<float> clean;
};

/// Target training utterance. There is deliberately no clean field.
struct UnlabeledUtterance {
  NoiseSpec noise;
  double snr_db = 0.0;
  std::vector<float> noisy;
};

struct Corpus {
  CorpusConfig config;
  std::vector<LabeledUtterance> source;
  std::vector<UnlabeledUtterance> target;
  std::vector<LabeledUtterance> heldout;
  // Unseen source-domain utterances, for measuring forgetting.
  std::vector<LabeledUtterance> source_heldout;
};

/// Deterministic in config.seed. Source, target and held-out utterances
/// use disjoint clean signals. Waveforms are rounded to 32-bit floats, the
/// precision they are cached at.
Corpus BuildCorpus(const CorpusConfig &config);

/// Writes manifest.json plus one raw little-endian float32 file per
/// waveform under `dir`.
void WriteCorpus(const Corpus &corpus, const std::string &dir);
Corpus ReadCorpus(const std::string &dir);

/// Per-bin affine normalization of network inputs (noisy log spectra) and
/// outputs (clean log spectra), fit on the source split.
struct FeatureNormalizer {
  Eigen::RowVectorXd input_mean, input_scale;
  Eigen::RowVectorXd output_mean, output_scale;

  static FeatureNormalizer Fit(const std::vector<Eigen::MatrixXd> &noisy,
                               const std::vector<Eigen::MatrixXd> &clean);
  Eigen::MatrixXd NormalizeInput(const Eigen::MatrixXd &frames) const;
  Eigen::MatrixXd NormalizeOutput(const Eigen::MatrixXd &frames) const;
  Eigen::MatrixXd DenormalizeOutput(const Eigen::MatrixXd &frames) const;

  void Write(std::ostream &os) const;
  static FeatureNormalizer Read(std::istream &is);
};

/// Row t holds frames t - c/2 .. t + c/2 side by side, with the edge frames
/// repeated past the ends. `context` must be odd.
Eigen::MatrixXd StackContext(const Eigen::MatrixXd &frames, int context);

/// Frames drawn from a set of utterances, addressed by a flat index. Inputs
/// are built with context on demand; labels exist only for labeled sets.
class FrameDataset {
 public:
  FrameDataset(int context, int num_bins);

  void AddUtterance(Eigen::MatrixXd inputs,
                    std::optional<Eigen::MatrixXd> labels = std::nullopt);

  int size() const { return static_cast<int>(index_.size()); }
  bool labeled() const { return labeled_; }
  int context() const { return context_; }
  int input_dim() const { return context_ * num_bins_; }
  int output_dim() const { return num_bins_; }

  Eigen::MatrixXd Inputs(std::span<const int> rows) const;
  Eigen::MatrixXd Labels(std::span<const int> rows) const;

 private:
  int context_, num_bins_;
  bool labeled_ = true;
  std::vector<Eigen::MatrixXd> inputs_, labels_;
  std::vector<std::pair<int, int>> index_;  // (utterance, frame)
};

std::vector<double> ToDouble(std::span<const float> x);

/// Log-magnitude frames of a float waveform.
Spectrogram Analyze(std::span<const float> wave, const SpectralConfig &config);

FrameDataset MakeSourceDataset(const std::vector<LabeledUtterance> &source,
                               const SpectralConfig &spectral,
                               const FeatureNormalizer &norm, int context);
FrameDataset MakeTargetDataset(const std::vector<UnlabeledUtterance> &target,
                               const SpectralConfig &spectral,
                               const FeatureNormalizer &norm, int context);
/// Labeled frames of held-out data, used to score source-domain fit.
FrameDataset MakeLabeledDataset(const std::vector<LabeledUtterance> &utts,
                                const SpectralConfig &spectral,
                                const FeatureNormalizer &norm, int context);

FeatureNormalizer FitNormalizer(const std::vector<LabeledUtterance> &source,
                                const SpectralConfig &spectral);

}  // namespace dotn

#endif  // DOTN_DATAGEN_H_

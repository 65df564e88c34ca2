// src/datagen.cc

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

#include "dotn/datagen.h"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>

#include "dotn/config-io.h"
#include "dotn/error.h"
#include "json.hpp"

namespace dotn {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::mutex fft_planner_mutex;

struct FamilyName {
  NoiseFamily family;
  const char *name;
};
constexpr FamilyName kFamilyNames[] = {
    {NoiseFamily::kPink, "pink"},
    {NoiseFamily::kBandLimitedWhite, "band-limited-white"},
    {NoiseFamily::kTonalHum, "tonal-hum"},
    {NoiseFamily::kAmplitudeModulatedBurst, "amplitude-modulated-burst"},
    {NoiseFamily::kSweptTone, "swept-tone"},
    {NoiseFamily::kBabbleProxy, "babble-proxy"},
    {NoiseFamily::kImpulsiveClicks, "impulsive-clicks"},
};

// Zeroes every DFT bin outside [low_hz, high_hz]. Works on any length.
void BandLimit(std::vector<double> *x, double low_hz, double high_hz,
               int sample_rate) {
  const int n = static_cast<int>(x->size());
  const int bins = n / 2 + 1;
  std::vector<std::complex<double>> spec(bins);
  fftw_plan fwd, inv;
  {
    std::lock_guard<std::mutex> lock(fft_planner_mutex);
    fwd = fftw_plan_dft_r2c_1d(n, x->data(),
                               reinterpret_cast<fftw_complex *>(spec.data()),
                               FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex *>(spec.data()),
                               x->data(), FFTW_ESTIMATE);
  }
  fftw_execute(fwd);
  for (int b = 0; b < bins; b++) {
    double hz = static_cast<double>(b) * sample_rate / n;
    if (hz < low_hz || hz > high_hz) spec[b] = 0.0;
    else spec[b] /= n;
  }
  fftw_execute(inv);
  std::lock_guard<std::mutex> lock(fft_planner_mutex);
  fftw_destroy_plan(fwd);
  fftw_destroy_plan(inv);
}

std::vector<double> WhiteNoise(int n, std::mt19937_64 *rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> x(n);
  for (double &v : x) v = g(*rng);
  return x;
}

double MeanPower(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s / static_cast<double>(x.size());
}

void PeakNormalize(std::vector<double> *x, double peak) {
  double mx = 0.0;
  for (double v : *x) mx = std::max(mx, std::abs(v));
  if (mx > 0.0)
    for (double &v : *x) v *= peak / mx;
}

// Syllable-like amplitude envelope: raised-cosine bumps of random length
// and height over a small floor, so the signal never goes fully silent.
std::vector<double> SyllableEnvelope(int n, int sample_rate, double rate_hz,
                                     std::mt19937_64 *rng) {
  std::uniform_real_distribution<double> height(0.5, 1.0);
  std::uniform_real_distribution<double> jitter(0.7, 1.3);
  std::vector<double> env(n, 0.0);
  int pos = 0;
  while (pos < n) {
    int len = std::max(16, static_cast<int>(sample_rate / rate_hz * jitter(*rng)));
    double h = height(*rng);
    for (int i = 0; i < len && pos + i < n; i++)
      env[pos + i] = 0.1 + h * std::pow(std::sin(std::numbers::pi * (i + 0.5) / len), 2);
    pos += len;
  }
  return env;
}

// Additive voiced source: harmonics of a gliding, vibrato-modulated pitch,
// weighted by a three-formant envelope whose targets change per syllable.
std::vector<double> HarmonicVoice(int n, int sample_rate, double syllable_hz,
                                  std::mt19937_64 *rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(*rng); };

  const double f0_base = uniform(100.0, 220.0);
  const double vib_rate = uniform(0.5, 2.0), vib_depth = uniform(0.05, 0.2);
  const double vib_phase = uniform(0.0, kTwoPi);
  const double glide = uniform(-0.15, 0.15);
  const double duration = static_cast<double>(n) / sample_rate;

  // Formant targets at syllable centers, linearly interpolated between.
  const double syllable_s = 1.0 / syllable_hz;
  const int num_targets = static_cast<int>(std::ceil(duration / syllable_s)) + 2;
  std::vector<std::array<double, 3>> targets(num_targets);
  for (auto &t : targets)
    t = {uniform(300.0, 850.0), uniform(900.0, 2300.0), uniform(2400.0, 3300.0)};
  constexpr std::array<double, 3> kBandwidth{90.0, 120.0, 160.0};
  constexpr std::array<double, 3> kGain{1.0, 0.6, 0.3};

  std::vector<double> env = SyllableEnvelope(n, sample_rate, syllable_hz, rng);
  const double nyquist_guard = 0.475 * sample_rate;
  const int max_harmonics = static_cast<int>(nyquist_guard / (f0_base * 0.7));
  std::vector<double> phases(max_harmonics, 0.0);
  for (double &p : phases) p = uniform(0.0, kTwoPi);

  std::vector<double> out(n, 0.0);
  double f0_phase = 0.0;
  std::array<double, 3> formant{};
  std::vector<double> amps(max_harmonics, 0.0);
  for (int i = 0; i < n; i++) {
    const double t = static_cast<double>(i) / sample_rate;
    const double f0 = f0_base * (1.0 + glide * t / duration) *
                      (1.0 + vib_depth * std::sin(kTwoPi * vib_rate * t + vib_phase));
    f0_phase += kTwoPi * f0 / sample_rate;
    if (i % 32 == 0) {
      double pos = t / syllable_s;
      int k0 = static_cast<int>(pos);
      double frac = pos - k0;
      for (int f = 0; f < 3; f++)
        formant[f] = (1.0 - frac) * targets[k0][f] + frac * targets[k0 + 1][f];
      for (int h = 0; h < max_harmonics; h++) {
        double hz = (h + 1) * f0;
        if (hz >= nyquist_guard) {
          amps[h] = 0.0;
          continue;
        }
        double a = 0.02 / (1.0 + hz / 1000.0);
        for (int f = 0; f < 3; f++) {
          double z = (hz - formant[f]) / kBandwidth[f];
          a += kGain[f] / (1.0 + z * z);
        }
        amps[h] = a;
      }
    }
    double s = 0.0;
    for (int h = 0; h < max_harmonics; h++)
      if (amps[h] > 0.0) s += amps[h] * std::sin((h + 1) * f0_phase + phases[h]);
    out[i] = env[i] * s;
  }
  // Breath noise keeps the spectrum between harmonics off the log floor.
  std::vector<double> breath = WhiteNoise(n, rng);
  double voiced_rms = std::sqrt(MeanPower(out));
  for (int i = 0; i < n; i++) out[i] += 0.01 * voiced_rms * env[i] * breath[i];
  return out;
}

std::vector<double> Chirp(int n, int sample_rate, std::mt19937_64 *rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double f_start = 150.0 + 100.0 * u01(*rng);
  const double f_end = 1500.0 + 1500.0 * u01(*rng);
  const double duration = static_cast<double>(n) / sample_rate;
  std::vector<double> env = SyllableEnvelope(n, sample_rate, 4.0, rng);
  std::vector<double> out(n);
  double phase = 0.0;
  for (int i = 0; i < n; i++) {
    double t = static_cast<double>(i) / sample_rate;
    double f = f_start * std::pow(f_end / f_start, t / duration);
    phase += kTwoPi * f / sample_rate;
    out[i] = env[i] * (std::sin(phase) + 0.5 * std::sin(2 * phase) +
                       0.25 * std::sin(3 * phase));
  }
  std::vector<double> breath = WhiteNoise(n, rng);
  for (int i = 0; i < n; i++) out[i] += 0.005 * env[i] * breath[i];
  return out;
}

// Glottal-like impulse train through three two-pole resonators.
std::vector<double> FilteredPulseTrain(int n, int sample_rate,
                                       std::mt19937_64 *rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double f0 = 100.0 + 120.0 * u01(*rng);
  const std::array<double, 3> formants{350.0 + 450.0 * u01(*rng),
                                       1000.0 + 1200.0 * u01(*rng),
                                       2500.0 + 700.0 * u01(*rng)};
  constexpr std::array<double, 3> kBandwidth{90.0, 120.0, 160.0};
  std::vector<double> x(n, 0.0);
  double next = 0.0;
  for (int i = 0; i < n; i++)
    if (i >= next) {
      x[i] = 1.0;
      next += sample_rate / (f0 * (1.0 + 0.05 * std::sin(kTwoPi * 1.3 * i / sample_rate)));
    }
  std::vector<double> breath = WhiteNoise(n, rng);
  for (int i = 0; i < n; i++) x[i] += 0.002 * breath[i];
  for (int f = 0; f < 3; f++) {
    double r = std::exp(-std::numbers::pi * kBandwidth[f] / sample_rate);
    double a1 = 2.0 * r * std::cos(kTwoPi * formants[f] / sample_rate);
    double a2 = -r * r;
    double y1 = 0.0, y2 = 0.0;
    for (int i = 0; i < n; i++) {
      double y = (1.0 - r) * x[i] + a1 * y1 + a2 * y2;
      y2 = y1;
      y1 = y;
      x[i] = y;
    }
  }
  std::vector<double> env = SyllableEnvelope(n, sample_rate, 4.0, rng);
  for (int i = 0; i < n; i++) x[i] *= env[i];
  return x;
}

// Paul Kellet's pink filter on white noise.
std::vector<double> PinkNoise(int n, std::mt19937_64 *rng) {
  std::vector<double> w = WhiteNoise(n, rng), out(n);
  double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
  for (int i = 0; i < n; i++) {
    double white = w[i];
    b0 = 0.99886 * b0 + white * 0.0555179;
    b1 = 0.99332 * b1 + white * 0.0750759;
    b2 = 0.96900 * b2 + white * 0.1538520;
    b3 = 0.86650 * b3 + white * 0.3104856;
    b4 = 0.55000 * b4 + white * 0.5329522;
    b5 = -0.7616 * b5 - white * 0.0168980;
    out[i] = b0 + b1 + b2 + b3 + b4 + b5 + b6 + white * 0.5362;
    b6 = white * 0.115926;
  }
  return out;
}

// Gate that is on for random bursts arriving at `rate_hz`, with 10 ms
// raised-cosine ramps and a small floor between bursts.
std::vector<double> BurstGate(int n, int sample_rate, double rate_hz,
                              std::mt19937_64 *rng) {
  std::exponential_distribution<double> gap(rate_hz);
  std::uniform_real_distribution<double> dur(0.05, 0.25);
  std::vector<double> g(n, 0.03);
  const int ramp = sample_rate / 100;
  double t = 0.25 * gap(*rng);
  bool any = false;
  while (true) {
    int start = static_cast<int>(t * sample_rate);
    if (start >= n) break;
    int len = static_cast<int>(dur(*rng) * sample_rate);
    for (int i = 0; i < len && start + i < n; i++) {
      double r = 1.0;
      if (i < ramp) r = std::pow(std::sin(0.5 * std::numbers::pi * i / ramp), 2);
      if (len - i < ramp)
        r = std::min(r, std::pow(std::sin(0.5 * std::numbers::pi * (len - i) / ramp), 2));
      g[start + i] = std::max(g[start + i], r);
    }
    any = true;
    t += static_cast<double>(len) / sample_rate + gap(*rng);
  }
  if (!any)  // guarantee at least one burst per utterance
    for (int i = n / 3; i < std::min(n, n / 3 + sample_rate / 10); i++) g[i] = 1.0;
  return g;
}

}  // namespace

const char *CleanGeneratorName(CleanGenerator g) {
  switch (g) {
    case CleanGenerator::kHarmonicVoice: return "harmonic-voice";
    case CleanGenerator::kChirp: return "chirp";
    case CleanGenerator::kFilteredPulseTrain: return "filtered-pulse-train";
  }
  return "unknown";
}

CleanGenerator CleanGeneratorFromName(const std::string &name) {
  for (CleanGenerator g : {CleanGenerator::kHarmonicVoice, CleanGenerator::kChirp,
                           CleanGenerator::kFilteredPulseTrain})
    if (name == CleanGeneratorName(g)) return g;
  ThrowConfigError("unknown clean generator '" + name + "'");
}

const char *NoiseFamilyName(NoiseFamily f) {
  for (const FamilyName &fn : kFamilyNames)
    if (fn.family == f) return fn.name;
  return "unknown";
}

NoiseFamily NoiseFamilyFromName(const std::string &name) {
  for (const FamilyName &fn : kFamilyNames)
    if (name == fn.name) return fn.family;
  ThrowConfigError("unknown noise family '" + name + "'");
}

bool IsStationary(NoiseFamily f) {
  return f == NoiseFamily::kPink || f == NoiseFamily::kBandLimitedWhite ||
         f == NoiseFamily::kTonalHum;
}

uint64_t DeriveSeed(uint64_t seed, uint64_t a, uint64_t b) {
  auto mix = [](uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ a) ^ (b * 0x2545f4914f6cdd1dULL));
}

CleanSignal GenerateClean(CleanGenerator generator, int num_samples,
                          int sample_rate, std::mt19937_64 *rng) {
  if (num_samples < 1 || sample_rate < 1000)
    ThrowArgumentError("bad clean signal length or sample rate");
  CleanSignal out;
  out.sample_rate = sample_rate;
  out.generator = generator;
  switch (generator) {
    case CleanGenerator::kHarmonicVoice:
      out.samples = HarmonicVoice(num_samples, sample_rate, 4.0, rng);
      break;
    case CleanGenerator::kChirp:
      out.samples = Chirp(num_samples, sample_rate, rng);
      break;
    case CleanGenerator::kFilteredPulseTrain:
      out.samples = FilteredPulseTrain(num_samples, sample_rate, rng);
      break;
  }
  PeakNormalize(&out.samples, 0.9);
  return out;
}

void NoiseSpec::Validate(int sample_rate) const {
  const double nyquist = 0.5 * sample_rate;
  std::string name = NoiseFamilyName(family);
  if (!(band_low_hz >= 0.0) || !(band_high_hz > band_low_hz) ||
      band_high_hz > nyquist)
    ThrowConfigError(name + ": band edges must satisfy 0 <= low < high <= " +
                     std::to_string(nyquist) + " Hz");
  if (!(modulation_hz > 0.0) || modulation_hz > 50.0)
    ThrowConfigError(name + ": modulation rate must be in (0, 50] Hz");
  if (family == NoiseFamily::kTonalHum && band_low_hz < 20.0)
    ThrowConfigError(name + ": hum fundamental (band low edge) must be >= 20 Hz");
}

NoiseSpec DefaultNoiseSpec(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::kPink: return {family, 20.0, 8000.0, 1.0};
    case NoiseFamily::kBandLimitedWhite: return {family, 300.0, 3000.0, 1.0};
    case NoiseFamily::kTonalHum: return {family, 60.0, 1500.0, 1.0};
    case NoiseFamily::kAmplitudeModulatedBurst: return {family, 2000.0, 7000.0, 3.0};
    case NoiseFamily::kSweptTone: return {family, 500.0, 6000.0, 1.0};
    case NoiseFamily::kBabbleProxy: return {family, 100.0, 4000.0, 4.0};
    case NoiseFamily::kImpulsiveClicks: return {family, 3000.0, 8000.0, 8.0};
  }
  return {};
}

std::vector<double> GenerateNoise(const NoiseSpec &spec, int num_samples,
                                  int sample_rate, std::mt19937_64 *rng) {
  spec.Validate(sample_rate);
  if (num_samples < 1) ThrowArgumentError("noise length must be positive");
  const int n = num_samples;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<double> x;
  switch (spec.family) {
    case NoiseFamily::kPink:
      x = PinkNoise(n, rng);
      BandLimit(&x, spec.band_low_hz, spec.band_high_hz, sample_rate);
      break;
    case NoiseFamily::kBandLimitedWhite:
      x = WhiteNoise(n, rng);
      BandLimit(&x, spec.band_low_hz, spec.band_high_hz, sample_rate);
      break;
    case NoiseFamily::kTonalHum: {
      const double f0 = spec.band_low_hz * (1.0 + 0.02 * (u01(*rng) - 0.5));
      x = WhiteNoise(n, rng);
      for (double &v : x) v *= 0.02;
      for (int h = 1; h * f0 <= spec.band_high_hz; h++) {
        double phase = kTwoPi * u01(*rng), amp = 1.0 / h;
        for (int i = 0; i < n; i++)
          x[i] += amp * std::sin(kTwoPi * h * f0 * i / sample_rate + phase);
      }
      break;
    }
    case NoiseFamily::kAmplitudeModulatedBurst: {
      x = WhiteNoise(n, rng);
      BandLimit(&x, spec.band_low_hz, spec.band_high_hz, sample_rate);
      std::vector<double> gate = BurstGate(n, sample_rate, spec.modulation_hz, rng);
      for (int i = 0; i < n; i++) x[i] *= gate[i];
      break;
    }
    case NoiseFamily::kSweptTone: {
      // Triangular sweep between the band edges, `modulation_hz` round
      // trips per second, plus a weaker second harmonic where it fits.
      x.assign(n, 0.0);
      double phase = kTwoPi * u01(*rng), offset = u01(*rng);
      for (int i = 0; i < n; i++) {
        double cyc = std::fmod(offset + spec.modulation_hz * i / sample_rate, 1.0);
        double tri = cyc < 0.5 ? 2.0 * cyc : 2.0 * (1.0 - cyc);
        double f = spec.band_low_hz + tri * (spec.band_high_hz - spec.band_low_hz);
        phase += kTwoPi * f / sample_rate;
        x[i] = std::sin(phase);
        if (2.0 * f < 0.5 * sample_rate) x[i] += 0.3 * std::sin(2.0 * phase);
      }
      std::vector<double> floor = WhiteNoise(n, rng);
      for (int i = 0; i < n; i++) x[i] += 0.01 * floor[i];
      break;
    }
    case NoiseFamily::kBabbleProxy: {
      x.assign(n, 0.0);
      for (int talker = 0; talker < 4; talker++) {
        std::vector<double> v = HarmonicVoice(n, sample_rate, spec.modulation_hz, rng);
        double gain = 0.5 + u01(*rng);
        double rms = std::sqrt(MeanPower(v));
        for (int i = 0; i < n; i++) x[i] += gain * v[i] / rms;
      }
      BandLimit(&x, spec.band_low_hz, spec.band_high_hz, sample_rate);
      break;
    }
    case NoiseFamily::kImpulsiveClicks: {
      x.assign(n, 0.0);
      std::exponential_distribution<double> gap(spec.modulation_hz);
      std::normal_distribution<double> g(0.0, 1.0);
      std::uniform_real_distribution<double> decay_ms(2.0, 8.0);
      double t = 0.5 * gap(*rng);
      bool any = false;
      while (static_cast<int>(t * sample_rate) < n) {
        int start = static_cast<int>(t * sample_rate);
        double tau = decay_ms(*rng) * 1e-3 * sample_rate, amp = 0.5 + u01(*rng);
        for (int i = 0; i < static_cast<int>(5 * tau) && start + i < n; i++)
          x[start + i] += amp * std::exp(-i / tau) * g(*rng);
        any = true;
        t += gap(*rng);
      }
      if (!any) x[n / 2] = 1.0;
      std::vector<double> floor = WhiteNoise(n, rng);
      for (int i = 0; i < n; i++) x[i] += 0.005 * floor[i];
      BandLimit(&x, spec.band_low_hz, spec.band_high_hz, sample_rate);
      break;
    }
  }
  return x;
}

MixedUtterance MixAtSnr(const CleanSignal &clean, std::span<const double> noise,
                        double snr_db, const NoiseSpec &spec) {
  if (clean.samples.size() != noise.size())
    ThrowArgumentError("clean and noise lengths differ");
  if (!std::isfinite(snr_db)) ThrowArgumentError("SNR must be finite");
  const double clean_power = MeanPower(clean.samples);
  const double noise_power = MeanPower(noise);
  if (!(clean_power > 0.0)) ThrowArgumentError("clean signal has zero power");
  if (!(noise_power > 0.0)) ThrowArgumentError("noise has zero power");
  const double gain =
      std::sqrt(clean_power / (noise_power * std::pow(10.0, snr_db / 10.0)));
  MixedUtterance out;
  out.clean = clean.samples;
  out.noisy.resize(noise.size());
  for (size_t i = 0; i < noise.size(); i++)
    out.noisy[i] = clean.samples[i] + gain * noise[i];
  out.snr_db = snr_db;
  out.noise = spec;
  return out;
}

CorpusConfig CorpusConfig::Default() {
  CorpusConfig c;
  c.source_noises = {DefaultNoiseSpec(NoiseFamily::kPink),
                     DefaultNoiseSpec(NoiseFamily::kBandLimitedWhite),
                     DefaultNoiseSpec(NoiseFamily::kTonalHum)};
  c.target_noises = {DefaultNoiseSpec(NoiseFamily::kAmplitudeModulatedBurst)};
  return c;
}

int CorpusConfig::samples_per_utterance() const {
  return static_cast<int>(std::lround(utterance_seconds * sample_rate));
}

void CorpusConfig::Validate() const {
  if (source_noises.empty()) ThrowConfigError("corpus.source_noises is empty");
  if (target_noises.empty()) ThrowConfigError("corpus.target_noises is empty");
  if (snr_grid_db.empty()) ThrowConfigError("corpus.snr_grid_db is empty");
  if (clean_generators.empty())
    ThrowConfigError("corpus.clean_generators is empty");
  for (double s : snr_grid_db)
    if (!std::isfinite(s)) ThrowConfigError("corpus.snr_grid_db has a non-finite entry");
  if (sample_rate < 1000) ThrowConfigError("corpus.sample_rate is too small");
  if (source_utterances_per_cell < 1 || target_utterances_per_cell < 1 ||
      heldout_utterances_per_cell < 1 || source_heldout_utterances_per_cell < 1)
    ThrowConfigError("corpus utterance counts must be at least 1");
  try {
    spectral.Validate();
  } catch (const Error &e) {
    ThrowConfigError(std::string("corpus.spectral: ") + e.what());
  }
  if (samples_per_utterance() < spectral.window)
    ThrowConfigError("corpus.utterance_seconds is shorter than one analysis window");

  std::set<NoiseFamily> source_families;
  for (const NoiseSpec &s : source_noises) {
    s.Validate(sample_rate);
    if (!source_families.insert(s.family).second)
      ThrowConfigError(std::string("corpus.source_noises lists '") +
                       NoiseFamilyName(s.family) + "' twice");
  }
  std::set<NoiseFamily> target_families;
  for (const NoiseSpec &s : target_noises) {
    s.Validate(sample_rate);
    if (source_families.count(s.family))
      ThrowConfigError(std::string("noise family '") + NoiseFamilyName(s.family) +
                       "' appears in both source and target");
    if (!target_families.insert(s.family).second)
      ThrowConfigError(std::string("corpus.target_noises lists '") +
                       NoiseFamilyName(s.family) + "' twice");
  }
}

namespace {

enum Stream : uint64_t {
  kSourceStream = 1,
  kTargetStream = 2,
  kHeldoutStream = 3,
  kSourceHeldoutStream = 4,
};

// Random streams are keyed by (split, family, SNR index, utterance) so a
// family's data does not depend on which other families are configured.
MixedUtterance MakeUtterance(const CorpusConfig &config, Stream stream,
                             const NoiseSpec &noise, int snr_index, int u) {
  const uint64_t key =
      DeriveSeed(config.seed, stream * 64 + static_cast<uint64_t>(noise.family),
                 static_cast<uint64_t>(snr_index) * 4096 + u);
  std::mt19937_64 clean_rng(DeriveSeed(key, 0)), noise_rng(DeriveSeed(key, 1));
  const int n = config.samples_per_utterance();
  CleanGenerator gen =
      config.clean_generators[(snr_index * 7 + u) % config.clean_generators.size()];
  CleanSignal clean = GenerateClean(gen, n, config.sample_rate, &clean_rng);
  std::vector<double> x = GenerateNoise(noise, n, config.sample_rate, &noise_rng);
  return MixAtSnr(clean, x, config.snr_grid_db[snr_index], noise);
}

std::vector<float> ToFloat(const std::vector<double> &x) {
  return std::vector<float>(x.begin(), x.end());
}

void WriteF32(const std::string &path, const std::vector<float> &x) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::kIo, "cannot write " + path);
  for (float v : x) {
    uint32_t bits = std::bit_cast<uint32_t>(v);
    char b[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                 static_cast<char>((bits >> 16) & 0xff),
                 static_cast<char>((bits >> 24) & 0xff)};
    os.write(b, 4);
  }
  if (!os) throw Error(ErrorKind::kIo, "failed writing " + path);
}

std::vector<float> ReadF32(const std::string &path, size_t expected) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::kIo, "cannot read " + path);
  std::vector<float> x(expected);
  for (size_t i = 0; i < expected; i++) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char *>(b), 4))
      throw Error(ErrorKind::kIo, "truncated waveform file " + path);
    uint32_t bits = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<uint32_t>(b[3]) << 24);
    x[i] = std::bit_cast<float>(bits);
  }
  return x;
}

}  // namespace

Corpus BuildCorpus(const CorpusConfig &config) {
  config.Validate();
  Corpus corpus;
  corpus.config = config;
  const int num_snr = static_cast<int>(config.snr_grid_db.size());
  for (const NoiseSpec &noise : config.source_noises)
    for (int s = 0; s < num_snr; s++)
      for (int u = 0; u < config.source_utterances_per_cell; u++) {
        MixedUtterance m = MakeUtterance(config, kSourceStream, noise, s, u);
        corpus.source.push_back({noise, m.snr_db, ToFloat(m.noisy), ToFloat(m.clean)});
      }
  for (const NoiseSpec &noise : config.source_noises)
    for (int s = 0; s < num_snr; s++)
      for (int u = 0; u < config.source_heldout_utterances_per_cell; u++) {
        MixedUtterance m = MakeUtterance(config, kSourceHeldoutStream, noise, s, u);
        corpus.source_heldout.push_back(
            {noise, m.snr_db, ToFloat(m.noisy), ToFloat(m.clean)});
      }
  for (const NoiseSpec &noise : config.target_noises)
    for (int s = 0; s < num_snr; s++) {
      for (int u = 0; u < config.target_utterances_per_cell; u++) {
        MixedUtterance m = MakeUtterance(config, kTargetStream, noise, s, u);
        corpus.target.push_back({noise, m.snr_db, ToFloat(m.noisy)});
      }
      for (int u = 0; u < config.heldout_utterances_per_cell; u++) {
        MixedUtterance m = MakeUtterance(config, kHeldoutStream, noise, s, u);
        corpus.heldout.push_back({noise, m.snr_db, ToFloat(m.noisy), ToFloat(m.clean)});
      }
    }
  return corpus;
}

void WriteCorpus(const Corpus &corpus, const std::string &dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "waves");
  nlohmann::ordered_json manifest;
  manifest["format"] = "dotn-corpus";
  manifest["version"] = 1;
  manifest["config"] = CorpusConfigToJson(corpus.config);
  manifest["samples_per_utterance"] = corpus.config.samples_per_utterance();
  auto &list = manifest["utterances"] = nlohmann::ordered_json::array();

  auto emit = [&](const char *split, int idx, const NoiseSpec &noise, double snr,
                  const std::vector<float> &noisy, const std::vector<float> *clean) {
    std::ostringstream stem;
    stem << "waves/" << split << "-" << std::setw(5) << std::setfill('0') << idx;
    nlohmann::ordered_json e;
    e["split"] = split;
    e["noise"] = NoiseSpecToJson(noise);
    e["snr_db"] = snr;
    e["noisy"] = stem.str() + ".noisy.f32";
    WriteF32((fs::path(dir) / (stem.str() + ".noisy.f32")).string(), noisy);
    if (clean) {
      e["clean"] = stem.str() + ".clean.f32";
      WriteF32((fs::path(dir) / (stem.str() + ".clean.f32")).string(), *clean);
    }
    list.push_back(e);
  };
  for (size_t i = 0; i < corpus.source.size(); i++) {
    const auto &u = corpus.source[i];
    emit("source", i, u.noise, u.snr_db, u.noisy, &u.clean);
  }
  for (size_t i = 0; i < corpus.target.size(); i++) {
    const auto &u = corpus.target[i];
    emit("target", i, u.noise, u.snr_db, u.noisy, nullptr);
  }
  for (size_t i = 0; i < corpus.heldout.size(); i++) {
    const auto &u = corpus.heldout[i];
    emit("heldout", i, u.noise, u.snr_db, u.noisy, &u.clean);
  }
  for (size_t i = 0; i < corpus.source_heldout.size(); i++) {
    const auto &u = corpus.source_heldout[i];
    emit("source-heldout", i, u.noise, u.snr_db, u.noisy, &u.clean);
  }
  std::ofstream os(fs::path(dir) / "manifest.json");
  os << manifest.dump(2) << '\n';
  if (!os) throw Error(ErrorKind::kIo, "cannot write corpus manifest in " + dir);
}

Corpus ReadCorpus(const std::string &dir) {
  namespace fs = std::filesystem;
  std::ifstream is(fs::path(dir) / "manifest.json");
  if (!is) throw Error(ErrorKind::kIo, "no corpus manifest in " + dir);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::kIo, std::string("corrupt corpus manifest: ") + e.what());
  }
  if (manifest.value("format", "") != "dotn-corpus" || manifest.value("version", 0) != 1)
    throw Error(ErrorKind::kIo, "unsupported corpus manifest in " + dir);
  Corpus corpus;
  corpus.config = CorpusConfigFromJson(manifest.at("config"), "config");
  const size_t n = manifest.at("samples_per_utterance").get<size_t>();
  for (const auto &e : manifest.at("utterances")) {
    std::string split = e.at("split");
    NoiseSpec noise = NoiseSpecFromJson(e.at("noise"), "noise");
    double snr = e.at("snr_db");
    std::vector<float> noisy =
        ReadF32((fs::path(dir) / e.at("noisy").get<std::string>()).string(), n);
    if (split == "target") {
      corpus.target.push_back({noise, snr, std::move(noisy)});
      continue;
    }
    std::vector<float> clean =
        ReadF32((fs::path(dir) / e.at("clean").get<std::string>()).string(), n);
    LabeledUtterance u{noise, snr, std::move(noisy), std::move(clean)};
    if (split == "source") corpus.source.push_back(std::move(u));
    else if (split == "heldout") corpus.heldout.push_back(std::move(u));
    else if (split == "source-heldout") corpus.source_heldout.push_back(std::move(u));
    else throw Error(ErrorKind::kIo, "unknown split '" + split + "' in manifest");
  }
  return corpus;
}

FeatureNormalizer FeatureNormalizer::Fit(const std::vector<Eigen::MatrixXd> &noisy,
                                         const std::vector<Eigen::MatrixXd> &clean) {
  auto stats = [](const std::vector<Eigen::MatrixXd> &frames,
                  Eigen::RowVectorXd *mean, Eigen::RowVectorXd *scale) {
    if (frames.empty()) ThrowArgumentError("cannot fit a normalizer on no data");
    const int bins = frames.front().cols();
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(bins);
    Eigen::RowVectorXd sq = Eigen::RowVectorXd::Zero(bins);
    double count = 0.0;
    for (const Eigen::MatrixXd &m : frames) {
      if (m.cols() != bins) ThrowShapeError("frames with different bin counts");
      sum += m.colwise().sum();
      sq += m.array().square().matrix().colwise().sum();
      count += m.rows();
    }
    *mean = sum / count;
    Eigen::RowVectorXd var = sq / count - mean->cwiseProduct(*mean);
    *scale = var.cwiseMax(1e-6).cwiseSqrt();
  };
  FeatureNormalizer n;
  stats(noisy, &n.input_mean, &n.input_scale);
  stats(clean, &n.output_mean, &n.output_scale);
  return n;
}

Eigen::MatrixXd FeatureNormalizer::NormalizeInput(const Eigen::MatrixXd &frames) const {
  return (frames.rowwise() - input_mean).array().rowwise() / input_scale.array();
}

Eigen::MatrixXd FeatureNormalizer::NormalizeOutput(const Eigen::MatrixXd &frames) const {
  return (frames.rowwise() - output_mean).array().rowwise() / output_scale.array();
}

Eigen::MatrixXd FeatureNormalizer::DenormalizeOutput(const Eigen::MatrixXd &frames) const {
  return (frames.array().rowwise() * output_scale.array()).matrix().rowwise() +
         output_mean;
}

void FeatureNormalizer::Write(std::ostream &os) const {
  auto old = os.precision(17);
  os << "dotn-normalizer 1\n" << input_mean.size() << '\n';
  for (const Eigen::RowVectorXd *v : {&input_mean, &input_scale, &output_mean, &output_scale}) {
    for (int i = 0; i < v->size(); i++) os << (i ? " " : "") << (*v)(i);
    os << '\n';
  }
  os.precision(old);
}

FeatureNormalizer FeatureNormalizer::Read(std::istream &is) {
  std::string magic;
  int version = 0, bins = 0;
  if (!(is >> magic >> version >> bins) || magic != "dotn-normalizer" || version != 1 ||
      bins < 1)
    throw Error(ErrorKind::kIo, "bad normalizer header");
  FeatureNormalizer n;
  for (Eigen::RowVectorXd *v : {&n.input_mean, &n.input_scale, &n.output_mean, &n.output_scale}) {
    v->resize(bins);
    for (int i = 0; i < bins; i++)
      if (!(is >> (*v)(i))) throw Error(ErrorKind::kIo, "truncated normalizer");
  }
  return n;
}

Eigen::MatrixXd StackContext(const Eigen::MatrixXd &frames, int context) {
  if (context < 1 || context % 2 == 0)
    ThrowArgumentError("context must be a positive odd number");
  const int t_max = frames.rows(), bins = frames.cols(), half = context / 2;
  Eigen::MatrixXd out(t_max, bins * context);
  for (int t = 0; t < t_max; t++)
    for (int c = 0; c < context; c++) {
      int src = std::clamp(t - half + c, 0, t_max - 1);
      out.block(t, c * bins, 1, bins) = frames.row(src);
    }
  return out;
}

FrameDataset::FrameDataset(int context, int num_bins)
    : context_(context), num_bins_(num_bins) {
  if (context < 1 || context % 2 == 0)
    ThrowArgumentError("context must be a positive odd number");
}

void FrameDataset::AddUtterance(Eigen::MatrixXd inputs,
                                std::optional<Eigen::MatrixXd> labels) {
  if (inputs.cols() != num_bins_) ThrowShapeError("utterance has the wrong bin count");
  if (labels && (labels->rows() != inputs.rows() || labels->cols() != num_bins_))
    ThrowShapeError("labels do not match inputs");
  if (inputs_.empty()) labeled_ = labels.has_value();
  else if (labeled_ != labels.has_value())
    ThrowArgumentError("cannot mix labeled and unlabeled utterances");
  const int u = static_cast<int>(inputs_.size());
  for (int t = 0; t < inputs.rows(); t++) index_.emplace_back(u, t);
  inputs_.push_back(std::move(inputs));
  if (labels) labels_.push_back(std::move(*labels));
}

Eigen::MatrixXd FrameDataset::Inputs(std::span<const int> rows) const {
  const int half = context_ / 2;
  Eigen::MatrixXd out(rows.size(), input_dim());
  for (size_t r = 0; r < rows.size(); r++) {
    auto [u, t] = index_.at(rows[r]);
    const Eigen::MatrixXd &frames = inputs_[u];
    for (int c = 0; c < context_; c++) {
      int src = std::clamp(t - half + c, 0, static_cast<int>(frames.rows()) - 1);
      out.block(r, c * num_bins_, 1, num_bins_) = frames.row(src);
    }
  }
  return out;
}

Eigen::MatrixXd FrameDataset::Labels(std::span<const int> rows) const {
  if (!labeled_) throw Error(ErrorKind::kState, "dataset has no labels");
  Eigen::MatrixXd out(rows.size(), num_bins_);
  for (size_t r = 0; r < rows.size(); r++) {
    auto [u, t] = index_.at(rows[r]);
    out.row(r) = labels_[u].row(t);
  }
  return out;
}

std::vector<double> ToDouble(std::span<const float> x) {
  return std::vector<double>(x.begin(), x.end());
}

Spectrogram Analyze(std::span<const float> wave, const SpectralConfig &config) {
  std::vector<double> x = ToDouble(wave);
  return SpectralFrames(x, config);
}

FeatureNormalizer FitNormalizer(const std::vector<LabeledUtterance> &source,
                                const SpectralConfig &spectral) {
  std::vector<Eigen::MatrixXd> noisy, clean;
  for (const LabeledUtterance &u : source) {
    noisy.push_back(Analyze(u.noisy, spectral).log_magnitude);
    clean.push_back(Analyze(u.clean, spectral).log_magnitude);
  }
  return FeatureNormalizer::Fit(noisy, clean);
}

FrameDataset MakeLabeledDataset(const std::vector<LabeledUtterance> &utts,
                                const SpectralConfig &spectral,
                                const FeatureNormalizer &norm, int context) {
  FrameDataset ds(context, spectral.num_bins());
  for (const LabeledUtterance &u : utts)
    ds.AddUtterance(norm.NormalizeInput(Analyze(u.noisy, spectral).log_magnitude),
                    norm.NormalizeOutput(Analyze(u.clean, spectral).log_magnitude));
  return ds;
}

FrameDataset MakeSourceDataset(const std::vector<LabeledUtterance> &source,
                               const SpectralConfig &spectral,
                               const FeatureNormalizer &norm, int context) {
  return MakeLabeledDataset(source, spectral, norm, context);
}

FrameDataset MakeTargetDataset(const std::vector<UnlabeledUtterance> &target,
                               const SpectralConfig &spectral,
                               const FeatureNormalizer &norm, int context) {
  FrameDataset ds(context, spectral.num_bins());
  for (const UnlabeledUtterance &u : target)
    ds.AddUtterance(norm.NormalizeInput(Analyze(u.noisy, spectral).log_magnitude));
  return ds;
}

}  // namespace dotn

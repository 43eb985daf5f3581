// Copyright (c) 2026 svkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SVKIT_AUGMENT_HPP_
#define SVKIT_AUGMENT_HPP_

#include <cmath>
#include <complex>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "svkit/audio.hpp"
#include "svkit/common.hpp"

namespace svkit {

inline double MeanPower(const std::vector<double>& x) {
  double p = 0;
  for (double v : x) p += v * v;
  return x.empty() ? 0.0 : p / static_cast<double>(x.size());
}

/// Noise looped or truncated to `length` samples.
inline std::vector<double> FitNoise(const Waveform& noise, std::size_t length) {
  Require(!noise.samples.empty(), "degenerate SNR");
  std::vector<double> out(length);
  for (std::size_t i = 0; i < length; ++i) out[i] = noise.samples[i % noise.samples.size()];
  return out;
}

/// Gain applied to the fitted noise so that the mixture has the requested SNR.
inline double NoiseGain(const Waveform& wave, const Waveform& noise, double snr_db) {
  Require(wave.sample_rate == noise.sample_rate, "sample rate mismatch");
  const double pw = MeanPower(wave.samples);
  const double pn = MeanPower(FitNoise(noise, wave.samples.size()));
  if (!(pw > 0) || !(pn > 0)) Fail("degenerate SNR");
  return std::sqrt(pw / pn) * std::pow(10.0, -snr_db / 20.0);
}

/// wave + g * noise, with g chosen so that 10 log10(P_wave / P_noise') = snr_db.
inline Waveform MixNoise(const Waveform& wave, const Waveform& noise, double snr_db) {
  const double g = NoiseGain(wave, noise, snr_db);
  const auto fitted = FitNoise(noise, wave.samples.size());
  Waveform out = wave;
  for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] += g * fitted[i];
  return out;
}

/// Convolves with a room impulse response, keeps the first len(wave)
/// samples, and rescales so the output peak equals the input peak.
inline Waveform Reverberate(const Waveform& wave, const Waveform& rir) {
  Require(!rir.samples.empty(), "empty impulse response");
  Require(wave.sample_rate == rir.sample_rate, "sample rate mismatch");
  Waveform out = wave;
  const std::size_t n = wave.samples.size(), m = rir.samples.size();
  if (n == 0) return out;
  std::size_t size = 1;
  while (size < n + m - 1) size *= 2;

  std::vector<double> a(size, 0.0), b(size, 0.0), conv;
  std::copy(wave.samples.begin(), wave.samples.end(), a.begin());
  std::copy(rir.samples.begin(), rir.samples.end(), b.begin());
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> fa, fb;
  fft.fwd(fa, a);
  fft.fwd(fb, b);
  for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
  fft.inv(conv, fa);

  double peak_in = 0, peak_out = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out.samples[i] = conv[i];
    peak_in = std::max(peak_in, std::abs(wave.samples[i]));
    peak_out = std::max(peak_out, std::abs(conv[i]));
  }
  if (peak_out > 0) {
    const double scale = peak_in / peak_out;
    for (double& x : out.samples) x *= scale;
  }
  return out;
}

}  // namespace svkit

#endif  // SVKIT_AUGMENT_HPP_

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

#ifndef SVKIT_FEATURES_HPP_
#define SVKIT_FEATURES_HPP_

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "svkit/audio.hpp"
#include "svkit/common.hpp"
#include "svkit/io.hpp"
#include "svkit/rng.hpp"

namespace svkit {

struct FeatureConfig {
  double frame_length_ms = 25.0;
  double frame_shift_ms = 10.0;
  double low_freq = 20.0;
  double high_freq = 7600.0;
  int num_filters = 40;
  int num_plp_coeffs = 30;
  int lpc_order = 30;
  double stmn_window_s = 3.0;
  double preemph = 0.97;
  double energy_floor = 1e-10;
  bool remove_dc = true;
  double cepstral_lifter = 22.0;
  double vad_k = -0.5;       // threshold = mean(logE) + vad_k * std(logE)
  int vad_context = 5;       // majority vote window, centered
  double dither = 0.0;       // 0 disables
  std::uint64_t dither_seed = 0;
};

/// Framed features. Row t holds frame t.
struct FeatureMatrix {
  Matrix values;
  double frame_shift_s = 0.010;
  double frame_length_s = 0.025;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

/// Per-frame speech decisions.
using VadMask = std::vector<bool>;

inline constexpr int kSampleRate = 16000;

inline std::size_t NumFrames(std::size_t num_samples, std::size_t frame,
                             std::size_t shift) {
  if (num_samples < frame) return 0;
  return 1 + (num_samples - frame) / shift;
}

inline double MelScale(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }
inline double InverseMelScale(double mel) {
  return 700.0 * (std::exp(mel / 1127.0) - 1.0);
}

inline void ValidateConfig(const FeatureConfig& cfg, int sample_rate) {
  if (sample_rate != kSampleRate)
    Fail("unsupported sample rate " + std::to_string(sample_rate));
  Require(cfg.low_freq > 0 && cfg.low_freq < cfg.high_freq &&
              cfg.high_freq <= sample_rate / 2.0,
          "invalid frequency limits");
  Require(cfg.num_filters >= cfg.num_plp_coeffs && cfg.num_plp_coeffs >= 1,
          "num_filters must be >= num_plp_coeffs");
  Require(cfg.frame_shift_ms > 0 && cfg.frame_shift_ms <= cfg.frame_length_ms,
          "frame_shift must be in (0, frame_length]");
  Require(cfg.lpc_order >= cfg.num_plp_coeffs - 1, "lpc_order too small");
}

/// Center frequencies (Hz) of the triangular mel filters.
inline std::vector<double> MelCenterFrequencies(const FeatureConfig& cfg) {
  const double lo = MelScale(cfg.low_freq), hi = MelScale(cfg.high_freq);
  const double delta = (hi - lo) / (cfg.num_filters + 1);
  std::vector<double> out(cfg.num_filters);
  for (int b = 0; b < cfg.num_filters; ++b)
    out[b] = InverseMelScale(lo + (b + 1) * delta);
  return out;
}

namespace internal {

/// Shared framing and spectral analysis for fbank, plp, and the VAD.
class Analyzer {
 public:
  Analyzer(const FeatureConfig& cfg, const Waveform& wave) : cfg_(cfg), wave_(wave) {
    ValidateConfig(cfg, wave.sample_rate);
    CheckFinite(wave);
    frame_ = static_cast<int>(std::lround(wave.sample_rate * cfg.frame_length_ms / 1000.0));
    shift_ = static_cast<int>(std::lround(wave.sample_rate * cfg.frame_shift_ms / 1000.0));
    num_frames_ = NumFrames(wave.samples.size(), frame_, shift_);
    if (num_frames_ == 0) Fail("input too short");
    padded_ = 1;
    while (padded_ < frame_) padded_ *= 2;

    // Povey window: Hann raised to 0.85, tapers to zero at both ends.
    window_.resize(frame_);
    const double a = 2.0 * std::numbers::pi / (frame_ - 1);
    for (int i = 0; i < frame_; ++i)
      window_[i] = std::pow(0.5 - 0.5 * std::cos(a * i), 0.85);

    const int bins = padded_ / 2 + 1;
    mel_banks_ = Matrix::Zero(cfg.num_filters, bins);
    const double bin_hz = static_cast<double>(wave.sample_rate) / padded_;
    const double lo = MelScale(cfg.low_freq), hi = MelScale(cfg.high_freq);
    const double delta = (hi - lo) / (cfg.num_filters + 1);
    for (int b = 0; b < cfg.num_filters; ++b) {
      const double left = lo + b * delta, center = left + delta, right = center + delta;
      for (int i = 0; i < bins; ++i) {
        const double mel = MelScale(i * bin_hz);
        if (mel > left && mel < right) {
          mel_banks_(b, i) = mel <= center ? (mel - left) / (center - left)
                                           : (right - mel) / (right - center);
        }
      }
    }
  }

  std::size_t num_frames() const { return num_frames_; }
  const Matrix& mel_banks() const { return mel_banks_; }

  /// Raw frame t after optional dither and DC removal.
  Vector RawFrame(std::size_t t) const {
    Vector x(frame_);
    const std::size_t start = t * shift_;
    for (int i = 0; i < frame_; ++i) x[i] = wave_.samples[start + i];
    if (cfg_.dither > 0) {
      Rng rng = Rng::Stream(cfg_.dither_seed, "dither", t);
      for (int i = 0; i < frame_; ++i) x[i] += cfg_.dither * rng.Normal();
    }
    if (cfg_.remove_dc) x.array() -= x.mean();
    return x;
  }

  /// Log energy of the raw frame, floored.
  double LogEnergy(std::size_t t) const {
    return std::log(std::max(RawFrame(t).squaredNorm(), cfg_.energy_floor));
  }

  /// Power spectrum (padded/2 + 1 bins) of the pre-emphasized, windowed frame.
  Vector PowerSpectrum(std::size_t t) {
    Vector x = RawFrame(t);
    for (int i = frame_ - 1; i > 0; --i) x[i] -= cfg_.preemph * x[i - 1];
    x[0] -= cfg_.preemph * x[0];
    std::vector<double> buf(padded_, 0.0);
    for (int i = 0; i < frame_; ++i) buf[i] = x[i] * window_[i];
    std::vector<std::complex<double>> spec;
    fft_.fwd(spec, buf);
    Vector power(padded_ / 2 + 1);
    for (int i = 0; i <= padded_ / 2; ++i) power[i] = std::norm(spec[i]);
    return power;
  }

  /// Floored mel filterbank energies of frame t (linear, not log).
  Vector MelEnergies(std::size_t t) {
    Vector e = mel_banks_ * PowerSpectrum(t);
    return e.cwiseMax(cfg_.energy_floor);
  }

  FeatureMatrix Empty(Eigen::Index cols) const {
    FeatureMatrix out;
    out.values.resize(static_cast<Eigen::Index>(num_frames_), cols);
    out.frame_shift_s = cfg_.frame_shift_ms / 1000.0;
    out.frame_length_s = cfg_.frame_length_ms / 1000.0;
    return out;
  }

 private:
  const FeatureConfig& cfg_;
  const Waveform& wave_;
  int frame_ = 0, shift_ = 0, padded_ = 0;
  std::size_t num_frames_ = 0;
  std::vector<double> window_;
  Matrix mel_banks_;
  Eigen::FFT<double> fft_;
};

/// Levinson-Durbin recursion. Returns predictor coefficients a[1..order]
/// (x[n] ~ sum_k a[k] x[n-k]) in a[0..order-1] and the residual energy.
inline double Durbin(const Vector& autocorr, int order, Vector* lpc) {
  if (!(autocorr[0] > 0)) Fail("LPC failure");
  Vector a = Vector::Zero(order), prev(order);
  double err = autocorr[0];
  for (int i = 0; i < order; ++i) {
    double acc = autocorr[i + 1];
    for (int j = 0; j < i; ++j) acc -= a[j] * autocorr[i - j];
    const double k = acc / err;
    if (!(std::abs(k) < 1.0)) Fail("LPC failure");
    prev = a;
    a[i] = k;
    for (int j = 0; j < i; ++j) a[j] = prev[j] - k * prev[i - 1 - j];
    err *= 1.0 - k * k;
    if (!(err > 0)) Fail("LPC failure");
  }
  *lpc = a;
  return err;
}

}  // namespace internal

/// 40-channel log mel filterbank energies.
inline FeatureMatrix Fbank(const Waveform& wave, const FeatureConfig& cfg = {}) {
  internal::Analyzer an(cfg, wave);
  FeatureMatrix out = an.Empty(cfg.num_filters);
  for (std::size_t t = 0; t < an.num_frames(); ++t)
    out.values.row(static_cast<Eigen::Index>(t)) = an.MelEnergies(t).array().log().transpose();
  return out;
}

/// Equal-loudness pre-emphasis curve evaluated at frequency hz.
inline double EqualLoudness(double hz) {
  const double fsq = hz * hz;
  const double fsub = fsq / (fsq + 1.6e5);
  return fsub * fsub * ((fsq + 1.44e6) / (fsq + 9.61e6));
}

/// Perceptual linear prediction cepstra on the mel filterbank.
///
/// Mel energies are weighted by the equal-loudness curve and cube-root
/// compressed. The compressed spectrum, with its two edge channels
/// duplicated, is cosine-transformed into an autocorrelation sequence;
/// Levinson-Durbin gives the all-pole model and the cepstrum follows from the
/// usual recursion. Coefficient 0 is the log residual energy.
inline FeatureMatrix Plp(const Waveform& wave, const FeatureConfig& cfg = {}) {
  internal::Analyzer an(cfg, wave);
  const int nf = cfg.num_filters, order = cfg.lpc_order, nc = cfg.num_plp_coeffs;
  const auto centers = MelCenterFrequencies(cfg);
  Vector loudness(nf);
  for (int b = 0; b < nf; ++b) loudness[b] = EqualLoudness(centers[b]);

  // Cosine basis over nf + 2 points spanning [0, pi].
  const int m = nf + 2;
  Matrix idft(order + 1, m);
  for (int k = 0; k <= order; ++k) {
    for (int j = 0; j < m; ++j) {
      const double w = (j == 0 || j == m - 1) ? 0.5 : 1.0;
      idft(k, j) = w * std::cos(std::numbers::pi * k * j / (m - 1)) / (m - 1);
    }
  }
  Vector lifter(nc);
  for (int i = 0; i < nc; ++i) {
    lifter[i] = cfg.cepstral_lifter > 0
                    ? 1.0 + 0.5 * cfg.cepstral_lifter *
                                std::sin(std::numbers::pi * i / cfg.cepstral_lifter)
                    : 1.0;
  }

  FeatureMatrix out = an.Empty(nc);
  Vector spectrum(m), lpc, ceps(nc);
  for (std::size_t t = 0; t < an.num_frames(); ++t) {
    const Vector e = an.MelEnergies(t).cwiseProduct(loudness);
    for (int b = 0; b < nf; ++b) spectrum[b + 1] = std::cbrt(e[b]);
    spectrum[0] = spectrum[1];
    spectrum[m - 1] = spectrum[m - 2];
    const Vector autocorr = idft * spectrum;
    const double residual = internal::Durbin(autocorr, order, &lpc);

    ceps[0] = std::log(residual);
    for (int n = 1; n < nc; ++n) {
      double c = lpc[n - 1];
      for (int k = 1; k < n; ++k)
        c += static_cast<double>(k) / n * ceps[k] * lpc[n - k - 1];
      ceps[n] = c;
    }
    out.values.row(static_cast<Eigen::Index>(t)) = ceps.cwiseProduct(lifter).transpose();
  }
  return out;
}

/// Short-time mean normalization: subtracts from each frame the mean over a
/// centered window of round(window_s / shift) frames, truncated at the edges.
inline FeatureMatrix Stmn(const FeatureMatrix& feats, double window_s) {
  Require(window_s > 0, "stmn window must be positive");
  FeatureMatrix out = feats;
  const Eigen::Index n = feats.rows();
  if (n == 0) return out;
  const auto width = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::lround(window_s / feats.frame_shift_s)));
  const Eigen::Index left = width / 2, right = width - 1 - left;

  // prefix.row(i) = sum of rows [0, i).
  Matrix prefix = Matrix::Zero(n + 1, feats.cols());
  for (Eigen::Index i = 0; i < n; ++i)
    prefix.row(i + 1) = prefix.row(i) + feats.values.row(i);
  for (Eigen::Index t = 0; t < n; ++t) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, t - left);
    const Eigen::Index hi = std::min<Eigen::Index>(n - 1, t + right);
    out.values.row(t) -= (prefix.row(hi + 1) - prefix.row(lo)) / double(hi - lo + 1);
  }
  return out;
}

/// Per-frame log energies on the fbank framing.
inline std::vector<double> FrameLogEnergies(const Waveform& wave,
                                            const FeatureConfig& cfg = {}) {
  internal::Analyzer an(cfg, wave);
  std::vector<double> out(an.num_frames());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = an.LogEnergy(t);
  return out;
}

/// Decision rule of the energy VAD applied to precomputed log energies.
inline VadMask VadFromLogEnergies(const std::vector<double>& log_energy,
                                  double k, int context) {
  const std::size_t n = log_energy.size();
  VadMask mask(n);
  if (n == 0) return mask;
  // Shifted-data moments: a constant sequence yields std = 0 and a
  // threshold equal to the value exactly.
  const double ref = log_energy[0];
  double sum = 0, sum_sq = 0;
  for (double e : log_energy) {
    sum += e - ref;
    sum_sq += (e - ref) * (e - ref);
  }
  const double mean_shift = sum / n;
  const double var = std::max(sum_sq / n - mean_shift * mean_shift, 0.0);
  const double threshold = ref + mean_shift + k * std::sqrt(var);

  std::vector<int> raw(n);
  for (std::size_t t = 0; t < n; ++t) raw[t] = log_energy[t] >= threshold;
  const int half = context / 2;
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t lo = t >= static_cast<std::size_t>(half) ? t - half : 0;
    const std::size_t hi = std::min(n - 1, t + (context - 1 - half));
    int votes = 0;
    for (std::size_t i = lo; i <= hi; ++i) votes += raw[i];
    mask[t] = 2 * votes >= static_cast<int>(hi - lo + 1);
  }
  return mask;
}

/// Energy-based voice activity detection.
inline VadMask EnergyVad(const Waveform& wave, const FeatureConfig& cfg = {}) {
  Require(cfg.vad_context >= 1, "vad_context must be >= 1");
  return VadFromLogEnergies(FrameLogEnergies(wave, cfg), cfg.vad_k, cfg.vad_context);
}

/// Drops frames whose mask entry is false.
inline FeatureMatrix ApplyVad(const FeatureMatrix& feats, const VadMask& mask) {
  if (static_cast<Eigen::Index>(mask.size()) != feats.rows())
    Fail("mask/feature mismatch");
  const auto kept = std::count(mask.begin(), mask.end(), true);
  if (kept == 0) Fail("no speech");
  FeatureMatrix out;
  out.frame_shift_s = feats.frame_shift_s;
  out.frame_length_s = feats.frame_length_s;
  out.values.resize(kept, feats.cols());
  Eigen::Index r = 0;
  for (std::size_t t = 0; t < mask.size(); ++t)
    if (mask[t]) out.values.row(r++) = feats.values.row(static_cast<Eigen::Index>(t));
  return out;
}

// SVF1 container: "SVF1", u32 rows, u32 cols, rows*cols f32 (row-major).

inline std::string EncodeFeatures(const Matrix& m) {
  ByteWriter w;
  w.PutBytes("SVF1");
  w.Put<std::uint32_t>(static_cast<std::uint32_t>(m.rows()));
  w.Put<std::uint32_t>(static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) w.Put<float>(static_cast<float>(m(r, c)));
  return w.bytes();
}

inline Matrix DecodeFeatures(std::string_view bytes) {
  ByteReader r(bytes, "bad feature file");
  if (r.GetBytes(4) != "SVF1") r.Bad();
  const auto rows = r.Get<std::uint32_t>(), cols = r.Get<std::uint32_t>();
  if (static_cast<std::uint64_t>(rows) * cols * 4 != bytes.size() - 12) r.Bad();
  Matrix m(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = r.Get<float>();
  return m;
}

inline void WriteFeatures(const std::string& path, const FeatureMatrix& feats) {
  WriteFile(path, EncodeFeatures(feats.values));
}

inline FeatureMatrix ReadFeatures(const std::string& path) {
  FeatureMatrix out;
  try {
    out.values = DecodeFeatures(ReadFile(path));
  } catch (const Error& e) {
    Fail(path + ": " + e.what());
  }
  return out;
}

}  // namespace svkit

#endif  // SVKIT_FEATURES_HPP_

#include <cmath>

#include <gtest/gtest.h>

#include "svkit/augment.hpp"
#include "svkit/rng.hpp"

namespace svkit {
namespace {

Waveform Random(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  Waveform w;
  w.samples.resize(n);
  for (auto& x : w.samples) x = rng.Normal();
  return w;
}

TEST(MixNoise, EqualPowerZeroSnrIsUnitGain) {
  Waveform a = Random(1, 1000), b = Random(2, 1000);
  const double scale = std::sqrt(MeanPower(a.samples) / MeanPower(b.samples));
  for (auto& x : b.samples) x *= scale;
  EXPECT_NEAR(NoiseGain(a, b, 0.0), 1.0, 1e-12);
}

TEST(MixNoise, SelfMixDoubles) {
  const Waveform a = Random(3, 500);
  const Waveform out = MixNoise(a, a, 0.0);
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    EXPECT_DOUBLE_EQ(out.samples[i], 2 * a.samples[i]);
}

TEST(MixNoise, FortyDbGain) {
  Waveform a, b;
  a.samples = {1, -1, 1, -1};
  b.samples = {-1, -1, 1, 1};
  EXPECT_NEAR(NoiseGain(a, b, 40.0), 0.01, 1e-15);
}

TEST(MixNoise, AchievesRequestedSnr) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Waveform a = Random(10 + s, 3000), n = Random(50 + s, 700);
    const double snr = -10.0 + s;
    const double g = NoiseGain(a, n, snr);
    auto fitted = FitNoise(n, a.samples.size());
    for (auto& x : fitted) x *= g;
    EXPECT_NEAR(10 * std::log10(MeanPower(a.samples) / MeanPower(fitted)), snr, 1e-9);
  }
}

TEST(MixNoise, DegenerateInputs) {
  const Waveform a = Random(1, 100);
  Waveform silent;
  silent.samples.assign(100, 0.0);
  EXPECT_THROW(MixNoise(a, silent, 10), Error);
  EXPECT_THROW(MixNoise(silent, a, 10), Error);
}

TEST(Reverberate, IdentityAndDelay) {
  const Waveform a = Random(4, 256);
  Waveform rir;
  rir.samples = {1.0};
  const Waveform same = Reverberate(a, rir);
  for (std::size_t i = 0; i < 256; ++i) EXPECT_NEAR(same.samples[i], a.samples[i], 1e-12);

  Waveform ramp;
  for (int i = 1; i <= 20; ++i) ramp.samples.push_back(i);
  rir.samples = {0, 0, 0, 1.0};
  const Waveform delayed = Reverberate(ramp, rir);
  // Peak moves out of range, so the output is rescaled to 20 / 17.
  for (int i = 0; i < 20; ++i) {
    const double expect = i < 3 ? 0.0 : (i - 2) * 20.0 / 17.0;
    EXPECT_NEAR(delayed.samples[i], expect, 1e-10);
  }
  Waveform empty;
  EXPECT_THROW(Reverberate(a, empty), Error);
}

TEST(Reverberate, MatchesDirectConvolution) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Waveform a = Random(20 + s, 64), h = Random(40 + s, 64);
    std::vector<double> direct(64, 0.0);
    for (int i = 0; i < 64; ++i)
      for (int j = 0; j <= i; ++j) direct[i] += a.samples[i - j] * h.samples[j];
    double pin = 0, pout = 0;
    for (int i = 0; i < 64; ++i) {
      pin = std::max(pin, std::abs(a.samples[i]));
      pout = std::max(pout, std::abs(direct[i]));
    }
    const Waveform out = Reverberate(a, h);
    for (int i = 0; i < 64; ++i) EXPECT_NEAR(out.samples[i], direct[i] * pin / pout, 1e-10);
  }
}

}  // namespace
}  // namespace svkit

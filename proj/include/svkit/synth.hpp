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

#ifndef SVKIT_SYNTH_HPP_
#define SVKIT_SYNTH_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "svkit/audio.hpp"
#include "svkit/common.hpp"
#include "svkit/plda.hpp"
#include "svkit/rng.hpp"
#include "svkit/scores.hpp"

namespace svkit::synth {

/// Knobs for PLDA-distributed embeddings. When `model` is set it is used as
/// the generator; otherwise one is drawn from the scale knobs.
struct PldaSynthSpec {
  std::uint64_t seed = 0;
  int dim = 16;
  int num_speakers = 50;
  int utts_per_speaker = 10;
  int speaker_rank = 2;
  int channel_rank = 2;
  double speaker_scale = 1.0;
  double channel_scale = 0.5;
  double noise_variance = 0.1;
  std::optional<backend::PldaModel> model;
};

struct PldaData {
  Matrix embeddings;        // one row per utterance, speaker-major
  std::vector<int> labels;  // 0 .. num_speakers-1
  backend::PldaModel model;
};

inline std::uint64_t PairIndex(int a, int b) {
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

inline backend::PldaModel DrawPldaModel(const PldaSynthSpec& s) {
  backend::PldaModel m;
  Rng rm = Rng::Stream(s.seed, "synth.mu"), rv = Rng::Stream(s.seed, "synth.V"),
      ru = Rng::Stream(s.seed, "synth.U"), rp = Rng::Stream(s.seed, "synth.psi");
  m.mu = Vector::NullaryExpr(s.dim, [&] { return rm.Normal(); });
  m.V = Matrix::NullaryExpr(s.dim, s.speaker_rank, [&] { return s.speaker_scale * rv.Normal(); });
  m.U = Matrix::NullaryExpr(s.dim, s.channel_rank, [&] { return s.channel_scale * ru.Normal(); });
  m.psi = Vector::NullaryExpr(s.dim, [&] { return s.noise_variance * rp.Uniform(0.5, 1.5); });
  return m;
}

/// x = mu + V h_spk + U w_utt + eps. Speaker and utterance draws come from
/// their own (speaker, utterance)-indexed streams.
inline PldaData GenPldaData(const PldaSynthSpec& s) {
  Require(s.num_speakers >= 2, "synthetic data needs at least 2 speakers");
  Require(s.utts_per_speaker >= 1 && s.dim >= 1, "invalid synthetic data size");
  PldaData out;
  out.model = s.model ? *s.model : DrawPldaModel(s);
  const auto& m = out.model;
  Require(m.mu.size() == m.V.rows() && m.mu.size() == m.U.rows() && m.mu.size() == m.psi.size(),
          "inconsistent synthetic PLDA model");
  const Eigen::Index d = m.dim();
  out.embeddings.resize(static_cast<Eigen::Index>(s.num_speakers) * s.utts_per_speaker, d);
  const Vector sd = m.psi.cwiseMax(0.0).cwiseSqrt();
  Eigen::Index row = 0;
  for (int spk = 0; spk < s.num_speakers; ++spk) {
    Rng rh = Rng::Stream(s.seed, "synth.h", static_cast<std::uint64_t>(spk));
    const Vector h = Vector::NullaryExpr(m.V.cols(), [&] { return rh.Normal(); });
    const Vector centre = m.mu + m.V * h;
    for (int u = 0; u < s.utts_per_speaker; ++u, ++row) {
      Rng rw = Rng::Stream(s.seed, "synth.w", PairIndex(spk, u));
      const Vector w = Vector::NullaryExpr(m.U.cols(), [&] { return rw.Normal(); });
      Rng re = Rng::Stream(s.seed, "synth.eps", PairIndex(spk, u));
      const Vector e = Vector::NullaryExpr(d, [&] { return re.Normal(); });
      out.embeddings.row(row) = (centre + m.U * w + sd.cwiseProduct(e)).transpose();
      out.labels.push_back(spk);
    }
  }
  return out;
}

/// Keyed trials over utterance indices, named by `ids`. Pairs are unordered
/// (i < j), sampled uniformly without replacement.
inline TrialList GenTrials(const std::vector<int>& labels, const std::vector<std::string>& ids,
                           std::size_t n_target, std::size_t n_nontarget, std::uint64_t seed) {
  Require(ids.size() == labels.size(), "one id per label required");
  const std::size_t n = labels.size();
  std::uint64_t same = 0, total = n * (n - (n > 0)) / 2;
  {
    std::map<int, std::uint64_t> count;
    for (int l : labels) ++count[l];
    for (const auto& [l, c] : count) same += c * (c - 1) / 2;
  }
  if (n_target > same || n_nontarget > total - same)
    Fail("insufficient pairs: requested " + std::to_string(n_target) + " target / " +
         std::to_string(n_nontarget) + " nontarget, available " + std::to_string(same) + " / " +
         std::to_string(total - same));

  auto sample = [&](bool target, std::size_t want, std::uint64_t avail) {
    std::vector<std::pair<std::size_t, std::size_t>> picked;
    if (want == 0) return picked;
    Rng rng = Rng::Stream(seed, target ? "trials.target" : "trials.nontarget");
    if (want * 3 > avail) {
      // Dense request: enumerate every eligible pair and take a partial shuffle.
      std::vector<std::pair<std::size_t, std::size_t>> all;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          if ((labels[i] == labels[j]) == target) all.push_back({i, j});
      for (std::size_t k = 0; k < want; ++k)
        std::swap(all[k], all[k + rng.Below(all.size() - k)]);
      picked.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(want));
      return picked;
    }
    std::set<std::pair<std::size_t, std::size_t>> seen;
    while (picked.size() < want) {
      std::size_t i = rng.Below(n), j = rng.Below(n);
      if (i == j || (labels[i] == labels[j]) != target) continue;
      if (i > j) std::swap(i, j);
      if (seen.insert({i, j}).second) picked.push_back({i, j});
    }
    return picked;
  };

  TrialList out;
  for (bool target : {true, false}) {
    for (auto [i, j] : sample(target, target ? n_target : n_nontarget, target ? same : total - same))
      out.trials.push_back({ids[i], ids[j], target});
  }
  // Interleave deterministically so the list is not sorted by label.
  Rng mix = Rng::Stream(seed, "trials.order");
  for (std::size_t k = out.trials.size(); k > 1; --k) std::swap(out.trials[k - 1], out.trials[mix.Below(k)]);
  return out;
}

inline std::vector<std::string> UtteranceIds(const std::vector<int>& labels) {
  std::vector<std::string> ids;
  std::map<int, int> next;
  char buf[64];
  for (int l : labels) {
    std::snprintf(buf, sizeof buf, "spk%03d-utt%03d", l, next[l]++);
    ids.emplace_back(buf);
  }
  return ids;
}

struct ToyCorpusSpec {
  std::uint64_t seed = 0;
  int num_speakers = 4;
  int utts_per_speaker = 5;
  double duration_s = 2.0;
  std::vector<double> resonance_hz;  // per speaker; drawn in [300, 3000] Hz when empty
  double pole_radius = 0.97;
  double gain_jitter_db = 6.0;
};

struct ToyUtterance {
  std::string id;
  std::string speaker;
  Waveform wave;
};

/// Two-pole resonator y[n] = x[n] + 2 r cos(w) y[n-1] - r^2 y[n-2].
inline std::vector<double> Resonate(const std::vector<double>& x, double freq_hz, double radius,
                                    double sample_rate = 16000) {
  const double a1 = 2.0 * radius * std::cos(2.0 * std::numbers::pi * freq_hz / sample_rate);
  const double a2 = -radius * radius;
  std::vector<double> y(x.size());
  double y1 = 0, y2 = 0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    y[n] = x[n] + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y[n];
  }
  return y;
}

inline std::vector<ToyUtterance> GenToyCorpus(const ToyCorpusSpec& s) {
  Require(s.num_speakers >= 2, "synthetic data needs at least 2 speakers");
  Require(s.utts_per_speaker >= 1 && s.duration_s > 0, "invalid toy corpus size");
  Require(s.pole_radius > 0 && s.pole_radius < 1, "pole radius must be in (0, 1)");
  Require(s.resonance_hz.empty() || s.resonance_hz.size() == static_cast<std::size_t>(s.num_speakers),
          "one resonance per speaker required");
  const auto length = static_cast<std::size_t>(std::llround(s.duration_s * 16000));
  std::vector<ToyUtterance> out;
  char buf[64];
  for (int spk = 0; spk < s.num_speakers; ++spk) {
    double f = 0;
    if (!s.resonance_hz.empty()) {
      f = s.resonance_hz[spk];
    } else {
      Rng rf = Rng::Stream(s.seed, "toy.resonance", static_cast<std::uint64_t>(spk));
      f = 300.0 * std::pow(10.0, rf.Uniform());
    }
    Require(f > 0 && f < 8000, "resonance must lie in (0, 8000) Hz");
    for (int u = 0; u < s.utts_per_speaker; ++u) {
      Rng rn = Rng::Stream(s.seed, "toy.noise", PairIndex(spk, u));
      std::vector<double> x(length);
      for (auto& v : x) v = rn.Normal();
      auto y = Resonate(x, f, s.pole_radius);
      double peak = 0;
      for (double v : y) peak = std::max(peak, std::abs(v));
      Rng rg = Rng::Stream(s.seed, "toy.gain", PairIndex(spk, u));
      const double gain_db = s.gain_jitter_db * rg.Uniform(-1.0, 1.0);
      const double scale = peak > 0 ? 0.25 * std::pow(10.0, gain_db / 20.0) / peak : 0.0;
      for (auto& v : y) v *= scale;
      ToyUtterance utt;
      std::snprintf(buf, sizeof buf, "spk%03d", spk);
      utt.speaker = buf;
      std::snprintf(buf, sizeof buf, "spk%03d-utt%03d", spk, u);
      utt.id = buf;
      utt.wave.samples = std::move(y);
      out.push_back(std::move(utt));
    }
  }
  return out;
}

}  // namespace svkit::synth

#endif  // SVKIT_SYNTH_HPP_

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

#ifndef SVKIT_CONFIG_HPP_
#define SVKIT_CONFIG_HPP_

#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "svkit/aam.hpp"
#include "svkit/backend.hpp"
#include "svkit/calibration.hpp"
#include "svkit/common.hpp"
#include "svkit/features.hpp"
#include "svkit/io.hpp"
#include "svkit/metrics.hpp"
#include "svkit/nnet.hpp"
#include "svkit/scorenorm.hpp"
#include "svkit/synth.hpp"

namespace svkit {

/// Everything a pipeline run can tune. Defaults are the published system's
/// values where it states them. File paths are command-line flags, not keys.
struct PipelineConfig {
  std::string feature_kind = "fbank";  // fbank | plp
  FeatureConfig features;
  bool stmn = true;
  bool vad = true;

  std::string arch = "resnet34";
  int embedding_dim = 0;  // 0: architecture default
  int num_classes = 5994;

  aam::AamConfig aam;
  int aam_epochs = 50;
  double aam_learning_rate = 0.1;

  backend::BackendConfig backend;
  scorenorm::SnormConfig snorm;
  bool snorm_enabled = true;
  std::vector<double> fusion_weights{0.4, 0.4, 0.1, 0.1};
  calibration::LogregConfig logreg;
  metrics::DcfParams dcf;

  std::uint64_t seed = 0;

  // synthetic data
  int synth_speakers = 4;
  int synth_utts = 5;
  double synth_duration_s = 2.0;
  int synth_dim = 32;
  int synth_speaker_rank = 8;
  int synth_channel_rank = 8;
  long synth_targets = -1;  // -1: every available pair
  long synth_nontargets = -1;
};

namespace internal {

inline bool ParseBool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  Fail(where + ": expected a boolean, got '" + v + "'");
}

inline long ParseInt(const std::string& v, const std::string& where) {
  std::size_t used = 0;
  long x = 0;
  try {
    x = std::stol(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) Fail(where + ": expected an integer, got '" + v + "'");
  return x;
}

inline std::vector<double> ParseList(const std::string& v, const std::string& where) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(ParseDouble(item, where));
  if (out.empty()) Fail(where + ": empty list");
  return out;
}

using Setter = std::function<void(PipelineConfig&, const std::string&, const std::string&)>;

inline const std::map<std::string, Setter>& Setters() {
  using C = PipelineConfig;
  using S = std::string;
  auto dbl = [](double C::*f) { return Setter([f](C& c, const S& v, const S& w) { c.*f = ParseDouble(v, w); }); };
  auto fdbl = [](double FeatureConfig::*f) {
    return Setter([f](C& c, const S& v, const S& w) { c.features.*f = ParseDouble(v, w); });
  };
  auto fint = [](int FeatureConfig::*f) {
    return Setter([f](C& c, const S& v, const S& w) { c.features.*f = static_cast<int>(ParseInt(v, w)); });
  };
  auto num = [](int C::*f) {
    return Setter([f](C& c, const S& v, const S& w) { c.*f = static_cast<int>(ParseInt(v, w)); });
  };
  auto flag = [](bool C::*f) { return Setter([f](C& c, const S& v, const S& w) { c.*f = ParseBool(v, w); }); };
  static const std::map<std::string, Setter> table = {
      {"feature.kind", [](C& c, const S& v, const S& w) {
         if (v != "fbank" && v != "plp") Fail(w + ": feature.kind must be fbank or plp");
         c.feature_kind = v;
       }},
      {"feature.num_filters", fint(&FeatureConfig::num_filters)},
      {"feature.num_ceps", fint(&FeatureConfig::num_plp_coeffs)},
      {"feature.lpc_order", fint(&FeatureConfig::lpc_order)},
      {"feature.low_freq", fdbl(&FeatureConfig::low_freq)},
      {"feature.high_freq", fdbl(&FeatureConfig::high_freq)},
      {"feature.preemph", fdbl(&FeatureConfig::preemph)},
      {"feature.dither", fdbl(&FeatureConfig::dither)},
      {"feature.stmn", flag(&C::stmn)},
      {"feature.stmn_window", fdbl(&FeatureConfig::stmn_window_s)},
      {"vad.enabled", flag(&C::vad)},
      {"vad.k", fdbl(&FeatureConfig::vad_k)},
      {"vad.context", fint(&FeatureConfig::vad_context)},
      {"nnet.arch", [](C& c, const S& v, const S&) {
         nnet::ParseArch(v);
         c.arch = v;
       }},
      {"nnet.embedding_dim", num(&C::embedding_dim)},
      {"nnet.num_classes", num(&C::num_classes)},
      {"aam.scale", [](C& c, const S& v, const S& w) { c.aam.scale = ParseDouble(v, w); }},
      {"aam.margin", [](C& c, const S& v, const S& w) { c.aam.margin = ParseDouble(v, w); }},
      {"aam.epochs", num(&C::aam_epochs)},
      {"aam.learning_rate", dbl(&C::aam_learning_rate)},
      {"backend.kind", [](C& c, const S& v, const S&) { c.backend.scoring = backend::ParseScoring(v); }},
      {"backend.scatter_epsilon", [](C& c, const S& v, const S& w) { c.backend.scatter_epsilon = ParseDouble(v, w); }},
      {"plda.speaker_rank", [](C& c, const S& v, const S& w) { c.backend.plda.speaker_rank = static_cast<int>(ParseInt(v, w)); }},
      {"plda.channel_rank", [](C& c, const S& v, const S& w) { c.backend.plda.channel_rank = static_cast<int>(ParseInt(v, w)); }},
      {"plda.em_iterations", [](C& c, const S& v, const S& w) { c.backend.plda.em_iterations = static_cast<int>(ParseInt(v, w)); }},
      {"snorm.enabled", flag(&C::snorm_enabled)},
      {"snorm.top_x", [](C& c, const S& v, const S& w) { c.snorm.top_x = static_cast<int>(ParseInt(v, w)); }},
      {"fusion.weights", [](C& c, const S& v, const S& w) { c.fusion_weights = ParseList(v, w); }},
      {"calibration.prior", [](C& c, const S& v, const S& w) { c.logreg.prior = ParseDouble(v, w); }},
      {"dcf.p_target", [](C& c, const S& v, const S& w) { c.dcf.p_target = ParseDouble(v, w); }},
      {"dcf.c_miss", [](C& c, const S& v, const S& w) { c.dcf.c_miss = ParseDouble(v, w); }},
      {"dcf.c_fa", [](C& c, const S& v, const S& w) { c.dcf.c_fa = ParseDouble(v, w); }},
      {"seed", [](C& c, const S& v, const S& w) {
         const long s = ParseInt(v, w);
         if (s < 0) Fail(w + ": seed must be non-negative");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"synth.num_speakers", num(&C::synth_speakers)},
      {"synth.utts_per_speaker", num(&C::synth_utts)},
      {"synth.duration", dbl(&C::synth_duration_s)},
      {"synth.dim", num(&C::synth_dim)},
      {"synth.speaker_rank", num(&C::synth_speaker_rank)},
      {"synth.channel_rank", num(&C::synth_channel_rank)},
      {"synth.num_target", [](C& c, const S& v, const S& w) { c.synth_targets = ParseInt(v, w); }},
      {"synth.num_nontarget", [](C& c, const S& v, const S& w) { c.synth_nontargets = ParseInt(v, w); }},
  };
  return table;
}

}  // namespace internal

inline std::vector<std::string> ConfigKeys() {
  std::vector<std::string> keys;
  for (const auto& [k, s] : internal::Setters()) keys.push_back(k);
  return keys;
}

inline void SetConfigValue(PipelineConfig& cfg, const std::string& key, const std::string& value,
                           const std::string& where) {
  const auto& table = internal::Setters();
  auto it = table.find(key);
  if (it == table.end()) Fail(where + ": unknown config key '" + key + "'");
  it->second(cfg, value, where);
}

/// "key = value" lines; '#' starts a comment. Unknown keys are rejected.
inline void ApplyConfigText(PipelineConfig& cfg, const std::string& text, const std::string& source = "config") {
  std::istringstream is(text);
  std::string line;
  for (int n = 1; std::getline(is, line); ++n) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string where = source + " line " + std::to_string(n);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (!SplitWhitespace(line).empty()) Fail(where + ": expected key = value");
      continue;
    }
    const auto key = SplitWhitespace(line.substr(0, eq));
    const auto value = SplitWhitespace(line.substr(eq + 1));
    if (key.size() != 1 || value.size() != 1) Fail(where + ": expected key = value");
    SetConfigValue(cfg, key[0], value[0], where);
  }
}

inline PipelineConfig LoadConfig(const std::string& path) {
  PipelineConfig cfg;
  ApplyConfigText(cfg, ReadFile(path), path);
  return cfg;
}

inline void ValidatePipelineConfig(const PipelineConfig& c) {
  ValidateConfig(c.features, kSampleRate);
  aam::ValidateConfig(c.aam);
  scorenorm::ValidateConfig(c.snorm);
  metrics::ValidateParams(c.dcf);
  if (!(c.logreg.prior > 0 && c.logreg.prior < 1)) Fail("calibration.prior must be in (0, 1)");
  if (c.backend.plda.em_iterations < 1) Fail("plda.em_iterations must be >= 1");
  if (c.backend.plda.speaker_rank < 1 || c.backend.plda.channel_rank < 0) Fail("invalid PLDA ranks");
  if (c.num_classes < 2) Fail("nnet.num_classes must be >= 2");
  if (c.embedding_dim < 0) Fail("nnet.embedding_dim must be >= 0");
  if (c.synth_speakers < 2 || c.synth_utts < 1) Fail("synthetic data needs >= 2 speakers and >= 1 utterance");
  if (!(c.synth_duration_s > 0)) Fail("synth.duration must be positive");
  if (c.aam_epochs < 0 || !(c.aam_learning_rate > 0)) Fail("invalid AAM schedule");
  for (double w : c.fusion_weights)
    if (!std::isfinite(w)) Fail("fusion.weights must be finite");
}

}  // namespace svkit

#endif  // SVKIT_CONFIG_HPP_

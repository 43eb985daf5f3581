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

#ifndef SVKIT_METRICS_HPP_
#define SVKIT_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "svkit/common.hpp"
#include "svkit/io.hpp"
#include "svkit/scores.hpp"

namespace svkit::metrics {

struct DcfParams {
  double p_target = 0.05;
  double c_miss = 1;
  double c_fa = 1;
};

inline void ValidateParams(const DcfParams& p) {
  if (!(p.p_target > 0 && p.p_target < 1)) Fail("p_target must be in (0, 1)");
  if (!(p.c_miss > 0) || !(p.c_fa > 0)) Fail("DCF costs must be positive");
}

/// Lines are "label enroll test" (label 1 or 0) or "enroll test"; one form
/// per file.
inline TrialList ParseTrials(const std::string& text, const std::string& source = "trials") {
  TrialList list;
  std::set<std::pair<std::string, std::string>> seen;
  std::istringstream is(text);
  std::string line;
  int form = 0;  // 2 or 3 tokens once known
  for (int n = 1; std::getline(is, line); ++n) {
    const auto tok = SplitWhitespace(line);
    if (tok.empty()) continue;
    const std::string where = source + " line " + std::to_string(n);
    if (tok.size() != 2 && tok.size() != 3) Fail(where + ": expected '[label] enroll test'");
    if (form != 0 && static_cast<int>(tok.size()) != form) Fail(where + ": mixed keyed and keyless trials");
    form = static_cast<int>(tok.size());
    Trial t;
    if (form == 3) {
      if (tok[0] != "1" && tok[0] != "0") Fail(where + ": label must be 1 or 0, got '" + tok[0] + "'");
      t.target = tok[0] == "1";
    }
    t.enroll = tok[form - 2];
    t.test = tok[form - 1];
    if (!seen.insert({t.enroll, t.test}).second) Fail(where + ": duplicate trial");
    list.trials.push_back(std::move(t));
  }
  return list;
}

inline TrialList ReadTrials(const std::string& path) { return ParseTrials(ReadFile(path), path); }

inline std::string FormatTrials(const TrialList& list) {
  std::string out;
  for (const auto& t : list.trials) {
    if (t.target) out += *t.target ? "1 " : "0 ";
    out += t.enroll + " " + t.test + "\n";
  }
  return out;
}

struct DetPoint {
  double p_miss;
  double p_fa;
};

/// One operating point per unique score used as threshold (accept if
/// score >= threshold), plus the reject-all point at +inf.
inline std::vector<DetPoint> DetPoints(const std::vector<double>& targets, const std::vector<double>& nontargets) {
  if (targets.empty() || nontargets.empty()) Fail("metrics need both target and nontarget trials");
  std::vector<std::pair<double, bool>> all;
  all.reserve(targets.size() + nontargets.size());
  for (double s : targets) all.push_back({s, true});
  for (double s : nontargets) all.push_back({s, false});
  for (const auto& [s, t] : all)
    if (!std::isfinite(s)) Fail("non-finite score");
  std::sort(all.begin(), all.end());
  const double nt = static_cast<double>(targets.size()), nn = static_cast<double>(nontargets.size());
  std::vector<DetPoint> pts;
  std::size_t miss = 0, fa = nontargets.size();
  for (std::size_t i = 0; i < all.size();) {
    pts.push_back({static_cast<double>(miss) / nt, static_cast<double>(fa) / nn});
    const double s = all[i].first;
    for (; i < all.size() && all[i].first == s; ++i) {
      if (all[i].second)
        ++miss;
      else
        --fa;
    }
  }
  pts.push_back({static_cast<double>(miss) / nt, static_cast<double>(fa) / nn});
  return pts;
}

/// Percent; linear interpolation between the two sweep points where
/// P_miss - P_fa changes sign.
inline double Eer(const std::vector<double>& targets, const std::vector<double>& nontargets) {
  const auto pts = DetPoints(targets, nontargets);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double dk = pts[k].p_miss - pts[k].p_fa;
    if (dk == 0) return 100.0 * pts[k].p_miss;
    if (dk > 0) {
      // pts[0] has P_miss = 0 and P_fa = 1, so k >= 1 here.
      const auto& a = pts[k - 1];
      const double da = a.p_miss - a.p_fa;
      const double alpha = da / (da - dk);
      return 100.0 * (a.p_miss + alpha * (pts[k].p_miss - a.p_miss));
    }
  }
  Fail("EER sweep did not cross");
}

/// Normalized minimum detection cost over the same threshold sweep.
inline double MinDcf(const std::vector<double>& targets, const std::vector<double>& nontargets,
                     const DcfParams& p = {}) {
  ValidateParams(p);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& pt : DetPoints(targets, nontargets))
    best = std::min(best, p.c_miss * p.p_target * pt.p_miss + p.c_fa * (1 - p.p_target) * pt.p_fa);
  return best / std::min(p.c_miss * p.p_target, p.c_fa * (1 - p.p_target));
}

inline double Eer(const ScoreSet& s, const TrialList& key) {
  std::vector<double> t, n;
  SplitByKey(s, key, &t, &n);
  return Eer(t, n);
}

inline double MinDcf(const ScoreSet& s, const TrialList& key, const DcfParams& p = {}) {
  std::vector<double> t, n;
  SplitByKey(s, key, &t, &n);
  return MinDcf(t, n, p);
}

inline std::vector<DetPoint> DetPoints(const ScoreSet& s, const TrialList& key) {
  std::vector<double> t, n;
  SplitByKey(s, key, &t, &n);
  return DetPoints(t, n);
}

/// "EER=<x>%  minDCF(p=<p>)=<y>"
inline std::string FormatMetrics(double eer_percent, double min_dcf, double p_target) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "EER=%.3f%%  minDCF(p=%g)=%.4f", eer_percent, p_target, min_dcf);
  return buf;
}

}  // namespace svkit::metrics

#endif  // SVKIT_METRICS_HPP_

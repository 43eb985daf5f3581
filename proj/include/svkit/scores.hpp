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

#ifndef SVKIT_SCORES_HPP_
#define SVKIT_SCORES_HPP_

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "svkit/common.hpp"
#include "svkit/io.hpp"

namespace svkit {

struct Trial {
  std::string enroll;
  std::string test;
  std::optional<bool> target;  // empty for keyless lists
};

/// Ordered trials. Either every trial carries a label or none does.
struct TrialList {
  std::vector<Trial> trials;

  bool keyed() const { return !trials.empty() && trials.front().target.has_value(); }
  std::size_t size() const { return trials.size(); }
};

struct Score {
  std::string enroll;
  std::string test;
  double value = 0;
};

/// Per-trial scores in trial order.
struct ScoreSet {
  std::vector<Score> scores;

  std::size_t size() const { return scores.size(); }
  std::vector<double> values() const {
    std::vector<double> v;
    v.reserve(scores.size());
    for (const auto& s : scores) v.push_back(s.value);
    return v;
  }
};

/// Score file: one "enroll test score" line per trial, 17 significant digits.
inline std::string FormatScoreSet(const ScoreSet& set) {
  std::string out;
  for (const auto& s : set.scores) out += s.enroll + " " + s.test + " " + FormatScore(s.value) + "\n";
  return out;
}

inline ScoreSet ParseScoreSet(const std::string& text, const std::string& source = "scores") {
  ScoreSet set;
  std::set<std::pair<std::string, std::string>> seen;
  std::istringstream is(text);
  std::string line;
  for (int n = 1; std::getline(is, line); ++n) {
    const auto tok = SplitWhitespace(line);
    if (tok.empty()) continue;
    const std::string where = source + " line " + std::to_string(n);
    if (tok.size() != 3) Fail(where + ": expected 'enroll test score'");
    const double v = ParseDouble(tok[2], where);
    if (!std::isfinite(v)) Fail(where + ": non-finite score");
    if (!seen.insert({tok[0], tok[1]}).second) Fail(where + ": duplicate trial");
    set.scores.push_back({tok[0], tok[1], v});
  }
  return set;
}

inline void WriteScoreSet(const std::string& path, const ScoreSet& set) {
  WriteFile(path, FormatScoreSet(set));
}

inline ScoreSet ReadScoreSet(const std::string& path) { return ParseScoreSet(ReadFile(path), path); }

/// Throws unless both lists name the same (enroll, test) pairs in the same order.
template <typename A, typename B>
void CheckSameTrials(const A& a, const B& b) {
  if (a.size() != b.size()) Fail("trial mismatch: lists differ in length");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].enroll != b[i].enroll || a[i].test != b[i].test)
      Fail("trial mismatch at trial " + std::to_string(i + 1) + " (" + a[i].enroll + " " +
           a[i].test + ")");
  }
}

/// Scores split by key label, in trial order.
inline void SplitByKey(const ScoreSet& scores, const TrialList& key,
                       std::vector<double>* targets, std::vector<double>* nontargets) {
  if (!key.keyed()) Fail("trial list has no labels");
  CheckSameTrials(scores.scores, key.trials);
  targets->clear();
  nontargets->clear();
  for (std::size_t i = 0; i < scores.size(); ++i)
    (*key.trials[i].target ? targets : nontargets)->push_back(scores.scores[i].value);
}

}  // namespace svkit

#endif  // SVKIT_SCORES_HPP_

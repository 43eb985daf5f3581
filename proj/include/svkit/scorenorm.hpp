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

#ifndef SVKIT_SCORENORM_HPP_
#define SVKIT_SCORENORM_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "svkit/backend.hpp"
#include "svkit/common.hpp"
#include "svkit/scores.hpp"
#include "svkit/tensor.hpp"

namespace svkit::scorenorm {

/// Speaker-averaged cohort, one preprocessed row per speaker.
struct Cohort {
  Matrix means;
  Eigen::Index size() const { return means.rows(); }
};

struct SnormConfig {
  int top_x = 300;
  double sigma_floor = 1e-12;
};

inline void ValidateConfig(const SnormConfig& c) {
  if (c.top_x < 2) Fail("snorm top_x must be >= 2");
  if (!(c.sigma_floor > 0)) Fail("snorm sigma floor must be positive");
}

/// Rows of x are raw embeddings. Each speaker contributes the mean of its
/// preprocessed embeddings; cosine cohorts are length-normalized again.
inline Cohort BuildCohort(const Matrix& x, const std::vector<int>& labels, const backend::Backend& b) {
  Require(static_cast<std::size_t>(x.rows()) == labels.size(), "one speaker label per embedding required");
  if (x.rows() == 0) Fail("cannot build a cohort from an empty set");
  const auto groups = backend::internal::GroupBySpeaker(labels);
  Cohort c;
  c.means.resize(static_cast<Eigen::Index>(groups.size()), x.cols());
  for (std::size_t s = 0; s < groups.size(); ++s) {
    Vector m = Vector::Zero(x.cols());
    for (Eigen::Index i : groups[s]) m += b.Preprocess(x.row(i).transpose());
    m /= static_cast<double>(groups[s].size());
    if (b.scoring() == backend::Scoring::kCosine) m = backend::LengthNormalize(m);
    c.means.row(static_cast<Eigen::Index>(s)) = m.transpose();
  }
  return c;
}

/// Mean and population deviation of the top_x highest scores.
inline std::pair<double, double> TopStats(std::vector<double> v, const SnormConfig& cfg) {
  const std::size_t k = std::min(v.size(), static_cast<std::size_t>(cfg.top_x));
  std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end(), std::greater<>());
  double mean = 0;
  for (std::size_t i = 0; i < k; ++i) mean += v[i];
  mean /= static_cast<double>(k);
  double var = 0;
  for (std::size_t i = 0; i < k; ++i) var += (v[i] - mean) * (v[i] - mean);
  return {mean, std::max(std::sqrt(var / static_cast<double>(k)), cfg.sigma_floor)};
}

inline double AdaptSnorm(double raw, const std::vector<double>& enroll_cohort,
                         const std::vector<double>& test_cohort, const SnormConfig& cfg) {
  ValidateConfig(cfg);
  if (enroll_cohort.size() < 2 || test_cohort.size() < 2) Fail("S-norm needs a cohort of at least 2");
  const auto [me, se] = TopStats(enroll_cohort, cfg);
  const auto [mt, st] = TopStats(test_cohort, cfg);
  return 0.5 * ((raw - me) / se + (raw - mt) / st);
}

/// Raw backend scores of each listed utterance against every cohort entry;
/// row i belongs to ids[i].
inline Matrix CohortScores(const backend::Backend& b, const Cohort& c, const backend::EmbeddingTable& table,
                           const std::vector<std::string>& ids) {
  Matrix out(static_cast<Eigen::Index>(ids.size()), c.size());
  std::vector<const Vector*> raw;
  for (const auto& id : ids) {
    auto it = table.find(id);
    if (it == table.end()) Fail("unknown utterance id '" + id + "'");
    raw.push_back(&it->second);
  }
  ParallelFor(ids.size(), [&](std::size_t i) {
    const Vector p = b.Preprocess(*raw[i]);
    for (Eigen::Index j = 0; j < c.size(); ++j)
      out(static_cast<Eigen::Index>(i), j) = b.Score(p, c.means.row(j).transpose());
  });
  return out;
}

/// Unique utterance ids referenced by the trials, sorted.
inline std::vector<std::string> TrialUtterances(const ScoreSet& s) {
  std::vector<std::string> ids;
  for (const auto& t : s.scores) {
    ids.push_back(t.enroll);
    ids.push_back(t.test);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

/// Normalizes every raw trial score with the matching rows of `cohort_scores`
/// (rows follow `ids`).
inline ScoreSet SnormScoreSet(const ScoreSet& raw, const std::vector<std::string>& ids,
                              const Matrix& cohort_scores, const SnormConfig& cfg) {
  ValidateConfig(cfg);
  Require(static_cast<std::size_t>(cohort_scores.rows()) == ids.size(), "cohort score rows must match ids");
  std::map<std::string, Eigen::Index> row;
  for (std::size_t i = 0; i < ids.size(); ++i) row[ids[i]] = static_cast<Eigen::Index>(i);
  auto scores_of = [&](const std::string& id) {
    auto it = row.find(id);
    if (it == row.end()) Fail("no cohort scores for utterance '" + id + "'");
    const auto r = cohort_scores.row(it->second);
    return std::vector<double>(r.begin(), r.end());
  };
  ScoreSet out = raw;
  ParallelFor(raw.size(), [&](std::size_t i) {
    const auto& t = raw.scores[i];
    out.scores[i].value = AdaptSnorm(t.value, scores_of(t.enroll), scores_of(t.test), cfg);
  });
  return out;
}

inline ScoreSet Snorm(const ScoreSet& raw, const backend::Backend& b, const Cohort& c,
                      const backend::EmbeddingTable& table, const SnormConfig& cfg) {
  const auto ids = TrialUtterances(raw);
  return SnormScoreSet(raw, ids, CohortScores(b, c, table, ids), cfg);
}

inline TensorStore CohortToTensors(const Cohort& c) {
  TensorStore s;
  s.Set("cohort.means", Tensor::FromMatrix(c.means));
  return s;
}

inline Cohort CohortFromTensors(const TensorStore& s) {
  Cohort c{s.Get("cohort.means").ToMatrix()};
  if (c.size() < 1) Fail("weights mismatch: empty cohort");
  return c;
}

}  // namespace svkit::scorenorm

#endif  // SVKIT_SCORENORM_HPP_

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

#ifndef SVKIT_CALIBRATION_HPP_
#define SVKIT_CALIBRATION_HPP_

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "svkit/common.hpp"
#include "svkit/io.hpp"
#include "svkit/scores.hpp"

namespace svkit::calibration {

/// Affine map sum_i w_i s_i + b.
struct FusionModel {
  std::vector<double> weights;
  double offset = 0;

  double Apply(const std::vector<double>& s) const {
    Require(s.size() == weights.size(), "score/weight count mismatch");
    double v = offset;
    for (std::size_t i = 0; i < s.size(); ++i) v += weights[i] * s[i];
    return v;
  }
};

struct LogregConfig {
  double prior = 0.5;
  int max_iterations = 1000;
  double tolerance = 1e-10;
};

inline double Logit(double p) { return std::log(p) - std::log1p(-p); }

/// log(1 + e^x) without overflow.
inline double Softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

/// Prior-weighted cross-entropy (nats) of scores read as log-likelihood ratios.
inline double CrossEntropy(const std::vector<double>& llr, const std::vector<bool>& target, double prior = 0.5) {
  Require(llr.size() == target.size(), "score/label count mismatch");
  const double shift = Logit(prior);
  double tgt = 0, non = 0;
  std::size_t nt = 0, nn = 0;
  for (std::size_t i = 0; i < llr.size(); ++i) {
    if (target[i]) {
      tgt += Softplus(-(llr[i] + shift));
      ++nt;
    } else {
      non += Softplus(llr[i] + shift);
      ++nn;
    }
  }
  if (nt == 0 || nn == 0) Fail("calibration needs both target and nontarget trials");
  return prior * tgt / static_cast<double>(nt) + (1 - prior) * non / static_cast<double>(nn);
}

struct LogregResult {
  FusionModel model;
  std::vector<double> objective;  // CE per accepted iterate, starting at (0, 0)
};

/// Minimizes prior-weighted CE of sigmoid(w.s + b + logit(prior)) by batch
/// gradient descent with backtracking. Columns are standardized internally;
/// the optimum is mapped back, so the result is the same convex minimizer.
inline LogregResult TrainLogreg(const Matrix& scores, const std::vector<bool>& target, const LogregConfig& cfg = {}) {
  if (!(cfg.prior > 0 && cfg.prior < 1)) Fail("prior must be in (0, 1)");
  Require(static_cast<std::size_t>(scores.rows()) == target.size(), "score/label count mismatch");
  Require(scores.cols() >= 1, "at least one system required");
  if (!scores.allFinite()) Fail("non-finite score");
  const Eigen::Index n = scores.rows(), k = scores.cols();
  std::size_t nt = 0;
  for (bool t : target) nt += t;
  if (nt == 0 || nt == target.size()) Fail("calibration needs both target and nontarget trials");

  const Vector mean = scores.colwise().mean().transpose();
  Vector scale = ((scores.rowwise() - mean.transpose()).colwise().squaredNorm().transpose() / static_cast<double>(n)).cwiseSqrt();
  for (Eigen::Index j = 0; j < k; ++j)
    if (!(scale[j] > 0)) scale[j] = 1;
  const Matrix z = (scores.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();

  const double shift = Logit(cfg.prior);
  const double wt = cfg.prior / static_cast<double>(nt), wn = (1 - cfg.prior) / static_cast<double>(target.size() - nt);
  // theta = [w' ; b'] in standardized coordinates.
  auto objective = [&](const Vector& theta, Vector* grad) {
    const Vector a = (z * theta.head(k)).array() + theta[k] + shift;
    double f = 0;
    Vector g_a(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (target[i]) {
        f += wt * Softplus(-a[i]);
        g_a[i] = -wt / (1 + std::exp(a[i]));
      } else {
        f += wn * Softplus(a[i]);
        g_a[i] = wn / (1 + std::exp(-a[i]));
      }
    }
    if (grad) {
      grad->resize(k + 1);
      grad->head(k) = z.transpose() * g_a;
      (*grad)[k] = g_a.sum();
    }
    return f;
  };

  // theta = 0 maps back to w = 0, b = 0.
  Vector theta = Vector::Zero(k + 1);
  LogregResult r;
  Vector grad;
  double f = objective(theta, &grad);
  r.objective.push_back(f);
  double step = 1.0;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const double g2 = grad.squaredNorm();
    if (g2 == 0) break;
    double f_new = 0;
    Vector cand;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      cand = theta - step * grad;
      f_new = objective(cand, nullptr);
      if (f_new <= f - 0.5 * step * g2) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const double improvement = f - f_new;
    theta = cand;
    f = objective(theta, &grad);
    r.objective.push_back(f);
    step *= 2.0;
    if (improvement < cfg.tolerance) break;
  }

  r.model.weights.resize(k);
  double b = theta[k];
  for (Eigen::Index j = 0; j < k; ++j) {
    r.model.weights[j] = theta[j] / scale[j];
    b -= r.model.weights[j] * mean[j];
  }
  r.model.offset = b;
  return r;
}

/// Score matrix [trials x systems] from aligned score sets.
inline Matrix StackScores(const std::vector<ScoreSet>& sets) {
  if (sets.empty()) Fail("at least one score set required");
  for (std::size_t s = 1; s < sets.size(); ++s) CheckSameTrials(sets[0].scores, sets[s].scores);
  Matrix m(static_cast<Eigen::Index>(sets[0].size()), static_cast<Eigen::Index>(sets.size()));
  for (std::size_t s = 0; s < sets.size(); ++s)
    for (std::size_t i = 0; i < sets[s].size(); ++i) {
      const double v = sets[s].scores[i].value;
      if (!std::isfinite(v)) Fail("non-finite score");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) = v;
    }
  return m;
}

inline ScoreSet ApplyFusion(const std::vector<ScoreSet>& sets, const FusionModel& model) {
  const Matrix m = StackScores(sets);
  if (model.weights.size() != sets.size()) Fail("fusion model has " + std::to_string(model.weights.size()) +
                                                " weights for " + std::to_string(sets.size()) + " systems");
  ScoreSet out = sets[0];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double v = model.offset;
    for (Eigen::Index s = 0; s < m.cols(); ++s) v += model.weights[s] * m(i, s);
    out.scores[i].value = v;
  }
  return out;
}

/// Per-trial weighted average sum w_i s_i / sum w_i.
inline ScoreSet FuseWeighted(const std::vector<ScoreSet>& sets, const std::vector<double>& weights) {
  if (weights.size() != sets.size())
    Fail("got " + std::to_string(weights.size()) + " weights for " + std::to_string(sets.size()) + " systems");
  double total = 0;
  for (double w : weights) {
    if (!std::isfinite(w)) Fail("non-finite fusion weight");
    total += w;
  }
  if (total == 0) Fail("fusion weights sum to zero");
  const Matrix m = StackScores(sets);
  ScoreSet out = sets[0];
  // Written as an offset from the first system so that identical inputs
  // come back bit-exact whatever the weights.
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double v = 0;
    for (Eigen::Index s = 1; s < m.cols(); ++s) v += weights[s] * (m(i, s) - m(i, 0));
    out.scores[i].value = m(i, 0) + v / total;
  }
  return out;
}

inline std::vector<bool> KeyLabels(const ScoreSet& s, const TrialList& key) {
  if (!key.keyed()) Fail("trial list has no labels");
  CheckSameTrials(s.scores, key.trials);
  std::vector<bool> t;
  for (const auto& tr : key.trials) t.push_back(*tr.target);
  return t;
}

struct PipelineResult {
  ScoreSet scores;
  std::vector<FusionModel> system_calibration;
  FusionModel fusion;
  FusionModel recalibration;
  FusionModel composite;  // the three stages folded into one affine map
};

/// Per-system calibration, LR fusion of the calibrated scores, and a final
/// calibration of the fused output.
inline PipelineResult CalibratePipeline(const std::vector<ScoreSet>& sets, const TrialList& key,
                                        const LogregConfig& cfg = {}) {
  const Matrix raw = StackScores(sets);
  const auto target = KeyLabels(sets[0], key);
  PipelineResult r;
  Matrix cal(raw.rows(), raw.cols());
  for (Eigen::Index s = 0; s < raw.cols(); ++s) {
    r.system_calibration.push_back(TrainLogreg(raw.col(s), target, cfg).model);
    const auto& m = r.system_calibration.back();
    cal.col(s) = (raw.col(s) * m.weights[0]).array() + m.offset;
  }
  r.fusion = TrainLogreg(cal, target, cfg).model;
  Matrix fused(raw.rows(), 1);
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    double v = r.fusion.offset;
    for (Eigen::Index s = 0; s < raw.cols(); ++s) v += r.fusion.weights[s] * cal(i, s);
    fused(i, 0) = v;
  }
  r.recalibration = TrainLogreg(fused, target, cfg).model;

  const double a = r.recalibration.weights[0];
  r.composite.offset = a * r.fusion.offset + r.recalibration.offset;
  for (Eigen::Index s = 0; s < raw.cols(); ++s) {
    const auto& m = r.system_calibration[s];
    r.composite.weights.push_back(a * r.fusion.weights[s] * m.weights[0]);
    r.composite.offset += a * r.fusion.weights[s] * m.offset;
  }
  r.scores = sets[0];
  for (Eigen::Index i = 0; i < raw.rows(); ++i) r.scores.scores[i].value = a * fused(i, 0) + r.recalibration.offset;
  return r;
}

/// Model file: "weight_<i>=<w>" lines (i from 0) then "offset=<b>".
inline std::string FormatModel(const FusionModel& m) {
  std::string out;
  for (std::size_t i = 0; i < m.weights.size(); ++i)
    out += "weight_" + std::to_string(i) + "=" + FormatScore(m.weights[i]) + "\n";
  out += "offset=" + FormatScore(m.offset) + "\n";
  return out;
}

inline FusionModel ParseModel(const std::string& text, const std::string& source = "model") {
  FusionModel m;
  bool have_offset = false;
  std::istringstream is(text);
  std::string line;
  for (int n = 1; std::getline(is, line); ++n) {
    const auto tok = SplitWhitespace(line);
    if (tok.empty()) continue;
    const std::string where = source + " line " + std::to_string(n);
    const auto eq = tok[0].find('=');
    if (tok.size() != 1 || eq == std::string::npos) Fail(where + ": expected key=value");
    const std::string key = tok[0].substr(0, eq);
    const double v = ParseDouble(tok[0].substr(eq + 1), where);
    if (!std::isfinite(v)) Fail(where + ": non-finite value");
    if (key == "offset") {
      if (have_offset) Fail(where + ": duplicate offset");
      m.offset = v;
      have_offset = true;
    } else if (key == "weight_" + std::to_string(m.weights.size())) {
      m.weights.push_back(v);
    } else {
      Fail(where + ": unexpected key '" + key + "'");
    }
  }
  if (m.weights.empty() || !have_offset) Fail(source + ": model needs weights and an offset");
  return m;
}

}  // namespace svkit::calibration

#endif  // SVKIT_CALIBRATION_HPP_

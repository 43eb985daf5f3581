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

#ifndef SVKIT_BACKEND_HPP_
#define SVKIT_BACKEND_HPP_

#include <algorithm>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "svkit/common.hpp"
#include "svkit/plda.hpp"
#include "svkit/scores.hpp"
#include "svkit/tensor.hpp"

namespace svkit::backend {

using EmbeddingTable = std::map<std::string, Vector>;

struct CenterStats {
  Vector mean;
};

/// Rows are discriminant directions, most discriminative first.
struct LdaTransform {
  Matrix mat;
  Vector eigenvalues;
};

enum class Scoring { kPlda, kCosine };

struct BackendConfig {
  Scoring scoring = Scoring::kPlda;
  PldaConfig plda;
  double scatter_epsilon = 1e-6;
};

inline Scoring ParseScoring(const std::string& s) {
  if (s == "plda") return Scoring::kPlda;
  if (s == "cosine") return Scoring::kCosine;
  Fail("unknown backend '" + s + "' (expected plda or cosine)");
}

inline std::string ScoringName(Scoring s) { return s == Scoring::kPlda ? "plda" : "cosine"; }

/// Rows of x are embeddings.
inline CenterStats EstimateCenter(const Matrix& x) {
  if (x.rows() == 0) Fail("cannot estimate center of an empty set");
  return {x.colwise().mean().transpose()};
}

inline Vector ApplyCenter(const Eigen::Ref<const Vector>& v, const CenterStats& c) {
  Require(v.size() == c.mean.size(), "embedding dim mismatch");
  return v - c.mean;
}

inline Vector LengthNormalize(const Eigen::Ref<const Vector>& v) {
  const double n = v.norm();
  if (!(n > 0) || !std::isfinite(n)) Fail("degenerate norm");
  return v / n;
}

inline double CosineScore(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  Require(a.size() == b.size(), "embedding dim mismatch");
  const double na = a.norm(), nb = b.norm();
  if (!(na > 0) || !(nb > 0)) Fail("degenerate norm");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

/// Within- and between-class scatter, both normalized by the sample count.
inline void ClassScatter(const Matrix& x, const std::vector<int>& labels, Matrix* sw, Matrix* sb) {
  const Eigen::Index d = x.cols();
  const double n = static_cast<double>(x.rows());
  const Vector mean = x.colwise().mean().transpose();
  *sw = Matrix::Zero(d, d);
  *sb = Matrix::Zero(d, d);
  for (const auto& idx : internal::GroupBySpeaker(labels)) {
    Vector m = Vector::Zero(d);
    for (Eigen::Index i : idx) m += x.row(i).transpose();
    m /= static_cast<double>(idx.size());
    for (Eigen::Index i : idx) {
      const Vector c = x.row(i).transpose() - m;
      sw->noalias() += c * c.transpose();
    }
    const Vector b = m - mean;
    sb->noalias() += static_cast<double>(idx.size()) * b * b.transpose();
  }
  *sw /= n;
  *sb /= n;
}

/// Full-dimension LDA. Directions beyond rank(S_b) carry eigenvalue ~0 and
/// come from the same S_w-orthonormal eigenbasis, so the whole transform
/// whitens the within-class scatter.
inline LdaTransform TrainLda(const Matrix& x, const std::vector<int>& labels, double epsilon = 1e-6) {
  Require(static_cast<std::size_t>(x.rows()) == labels.size(), "one speaker label per embedding required");
  const Eigen::Index d = x.cols();
  if (internal::GroupBySpeaker(labels).size() < 2) Fail("LDA needs at least 2 classes");
  Matrix sw, sb;
  ClassScatter(x, labels, &sw, &sb);
  sw.diagonal().array() += epsilon * sw.trace() / static_cast<double>(d);
  Eigen::LLT<Matrix> llt(sw);
  if (llt.info() != Eigen::Success || !(sw.trace() > 0)) Fail("singular within-class scatter");
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(sb, sw, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) Fail("LDA eigenproblem failed");

  std::vector<Eigen::Index> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return es.eigenvalues()(a) > es.eigenvalues()(b);
  });
  LdaTransform t;
  t.mat.resize(d, d);
  t.eigenvalues.resize(d);
  for (Eigen::Index r = 0; r < d; ++r) {
    Vector v = es.eigenvectors().col(order[r]);
    Eigen::Index big;
    v.cwiseAbs().maxCoeff(&big);
    if (v(big) < 0) v = -v;  // sign convention for reproducible output
    t.mat.row(r) = v.transpose();
    t.eigenvalues(r) = es.eigenvalues()(order[r]);
  }
  return t;
}

inline double FisherRatio(const Matrix& x, const std::vector<int>& labels, const Vector& dir) {
  Matrix sw, sb;
  ClassScatter(x, labels, &sw, &sb);
  return dir.dot(sb * dir) / dir.dot(sw * dir);
}

/// Speaker-mean of the given rows, grouped by label order.
inline Vector AverageEmbeddings(const std::vector<Vector>& embs) {
  if (embs.empty()) Fail("no embeddings to average");
  Vector m = Vector::Zero(embs.front().size());
  for (const auto& e : embs) {
    Require(e.size() == m.size(), "embedding dim mismatch");
    m += e;
  }
  return m / static_cast<double>(embs.size());
}

/// Trained backend: preprocessing chain plus scorer.
class Backend {
 public:
  Backend() = default;

  static Backend Cosine(CenterStats center) {
    Backend b;
    b.scoring_ = Scoring::kCosine;
    b.center_ = std::move(center);
    return b;
  }

  static Backend Plda(CenterStats center, LdaTransform lda, PldaModel model) {
    Backend b;
    b.scoring_ = Scoring::kPlda;
    b.center_ = std::move(center);
    b.lda_ = std::move(lda);
    b.plda_ = std::move(model);
    b.scorer_ = std::make_shared<PldaScorer>(b.plda_);
    return b;
  }

  Scoring scoring() const { return scoring_; }
  const CenterStats& center() const { return center_; }
  const LdaTransform& lda() const { return lda_; }
  const PldaModel& plda() const { return plda_; }
  Eigen::Index dim() const { return center_.mean.size(); }

  /// center -> LDA -> length-norm for PLDA, center only for cosine.
  Vector Preprocess(const Eigen::Ref<const Vector>& raw) const {
    Vector v = ApplyCenter(raw, center_);
    if (scoring_ == Scoring::kCosine) return v;
    return LengthNormalize(lda_.mat * v);
  }

  Matrix PreprocessRows(const Matrix& x) const {
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = Preprocess(x.row(i).transpose()).transpose();
    return out;
  }

  /// Scores two already-preprocessed embeddings.
  double Score(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) const {
    if (scoring_ == Scoring::kCosine) return CosineScore(a, b);
    return scorer_->Llr(a, b);
  }

  TensorStore ToTensors() const {
    TensorStore s;
    s.Set("center.mean", Tensor::FromVector(center_.mean));
    if (scoring_ == Scoring::kPlda) {
      s.Set("lda.mat", Tensor::FromMatrix(lda_.mat));
      s.Set("plda.mu", Tensor::FromVector(plda_.mu));
      s.Set("plda.V", Tensor::FromMatrix(plda_.V));
      s.Set("plda.U", Tensor::FromMatrix(plda_.U));
      s.Set("plda.psi", Tensor::FromVector(plda_.psi));
    }
    return s;
  }

  static Backend FromTensors(const TensorStore& s) {
    CenterStats c{s.Get("center.mean").ToVector()};
    if (!s.Has("plda.mu")) return Cosine(std::move(c));
    const Eigen::Index d = c.mean.size();
    LdaTransform lda{s.Get("lda.mat").ToMatrix(), Vector()};
    PldaModel m{s.Get("plda.mu").ToVector(), s.Get("plda.V").ToMatrix(), s.Get("plda.U").ToMatrix(),
                s.Get("plda.psi").ToVector()};
    if (lda.mat.rows() != d || lda.mat.cols() != d || m.mu.size() != d || m.V.rows() != d ||
        m.U.rows() != d || m.psi.size() != d)
      Fail("weights mismatch: backend tensors have inconsistent dimensions");
    if ((m.psi.array() <= 0).any()) Fail("weights mismatch: non-positive PLDA residual variance");
    return Plda(std::move(c), std::move(lda), std::move(m));
  }

 private:
  Scoring scoring_ = Scoring::kCosine;
  CenterStats center_;
  LdaTransform lda_;
  PldaModel plda_;
  std::shared_ptr<const PldaScorer> scorer_;
};

struct BackendTrainResult {
  Backend backend;
  std::vector<double> log_likelihood;  // empty for cosine
};

/// Trains the preprocessing chain and (for PLDA) the model on raw embeddings.
inline BackendTrainResult TrainBackend(const Matrix& x, const std::vector<int>& labels, const BackendConfig& cfg) {
  Require(static_cast<std::size_t>(x.rows()) == labels.size(), "one speaker label per embedding required");
  if (!x.allFinite()) Fail("non-finite embedding in training set");
  CenterStats c = EstimateCenter(x);
  BackendTrainResult r;
  if (cfg.scoring == Scoring::kCosine) {
    r.backend = Backend::Cosine(std::move(c));
    return r;
  }
  const Matrix centered = x.rowwise() - c.mean.transpose();
  LdaTransform lda = TrainLda(centered, labels, cfg.scatter_epsilon);
  Matrix pre(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    pre.row(i) = LengthNormalize(lda.mat * centered.row(i).transpose()).transpose();
  auto plda = TrainPlda(pre, labels, cfg.plda);
  r.log_likelihood = std::move(plda.log_likelihood);
  r.backend = Backend::Plda(std::move(c), std::move(lda), std::move(plda.model));
  return r;
}

/// One score per trial, in trial order. Scoring runs in parallel over trials.
inline ScoreSet ScoreTrials(const Backend& b, const EmbeddingTable& embeddings, const TrialList& trials) {
  auto lookup = [&](const std::string& id) -> const Vector& {
    auto it = embeddings.find(id);
    if (it == embeddings.end()) Fail("unknown utterance id '" + id + "'");
    return it->second;
  };
  // Preprocess each referenced utterance once.
  std::map<std::string, Vector> pre;
  for (const auto& t : trials.trials) {
    for (const auto* id : {&t.enroll, &t.test})
      if (!pre.count(*id)) pre.emplace(*id, b.Preprocess(lookup(*id)));
  }
  ScoreSet out;
  out.scores.resize(trials.size());
  ParallelFor(trials.size(), [&](std::size_t i) {
    const auto& t = trials.trials[i];
    out.scores[i] = {t.enroll, t.test, b.Score(pre.at(t.enroll), pre.at(t.test))};
  });
  return out;
}

}  // namespace svkit::backend

#endif  // SVKIT_BACKEND_HPP_

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

#ifndef SVKIT_PLDA_HPP_
#define SVKIT_PLDA_HPP_

#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include "svkit/common.hpp"
#include "svkit/rng.hpp"

namespace svkit::backend {

/// x = mu + V h + U w + eps, h ~ N(0, I) per speaker, w ~ N(0, I) per
/// utterance, eps ~ N(0, diag(psi)).
struct PldaModel {
  Vector mu;
  Matrix V;   // d x speaker_rank
  Matrix U;   // d x channel_rank
  Vector psi;

  Eigen::Index dim() const { return mu.size(); }
  Matrix Between() const { return V * V.transpose(); }
  Matrix Within() const {
    Matrix w = U * U.transpose();
    w.diagonal() += psi;
    return w;
  }
};

struct PldaConfig {
  int speaker_rank = 312;
  int channel_rank = 312;
  int em_iterations = 10;
  std::uint64_t seed = 0;
};

struct PldaTrainResult {
  PldaModel model;
  std::vector<double> log_likelihood;  // before each iteration, then final
};

namespace internal {

inline double LogDet(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

inline Eigen::LLT<Matrix> CheckedLlt(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) Fail(std::string(what) + " is not positive definite");
  return llt;
}

/// Utterance indices grouped by speaker, ordered by speaker label.
inline std::vector<std::vector<Eigen::Index>> GroupBySpeaker(const std::vector<int>& labels) {
  std::map<int, std::vector<Eigen::Index>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(static_cast<Eigen::Index>(i));
  std::vector<std::vector<Eigen::Index>> out;
  for (auto& [spk, idx] : groups) out.push_back(std::move(idx));
  return out;
}

}  // namespace internal

/// Marginal log-likelihood of the training set (speakers independent,
/// utterances of a speaker share h).
inline double PldaLogLikelihood(const PldaModel& m, const Matrix& x, const std::vector<int>& labels) {
  const Eigen::Index d = m.dim();
  const auto within_llt = internal::CheckedLlt(m.Within(), "within-class covariance");
  const double logdet_w = internal::LogDet(within_llt);
  const Matrix wv = within_llt.solve(m.V);  // W^-1 V
  const Matrix vwv = m.V.transpose() * wv;
  double ll = 0;
  for (const auto& idx : internal::GroupBySpeaker(labels)) {
    const double n = static_cast<double>(idx.size());
    Vector sum = Vector::Zero(d);
    double quad = 0;
    for (Eigen::Index i : idx) {
      const Vector c = x.row(i).transpose() - m.mu;
      sum += c;
      quad += c.dot(within_llt.solve(c));
    }
    Matrix p = n * vwv;
    p.diagonal().array() += 1.0;
    const auto p_llt = internal::CheckedLlt(p, "speaker posterior precision");
    const Vector proj = wv.transpose() * sum;
    quad -= proj.dot(p_llt.solve(proj));
    const double logdet = n * logdet_w + internal::LogDet(p_llt);
    ll += -0.5 * (n * d * std::log(2.0 * std::numbers::pi) + logdet + quad);
  }
  return ll;
}

/// One EM update of (V, U, psi) with mu held at the data mean.
inline PldaModel PldaEmStep(const PldaModel& m, const Matrix& x, const std::vector<int>& labels) {
  const Eigen::Index d = m.dim(), rs = m.V.cols(), rc = m.U.cols(), r = rs + rc;
  const auto within_llt = internal::CheckedLlt(m.Within(), "within-class covariance");
  const Matrix wv = within_llt.solve(m.V);
  const Matrix vwv = m.V.transpose() * wv;

  // Channel posterior given h: precision I + U' Psi^-1 U.
  const Vector psi_inv = m.psi.cwiseInverse();
  Matrix pw = m.U.transpose() * psi_inv.asDiagonal() * m.U;
  pw.diagonal().array() += 1.0;
  const Matrix cw = rc > 0 ? Matrix(internal::CheckedLlt(pw, "channel precision").solve(Matrix::Identity(rc, rc)))
                           : Matrix(0, 0);
  const Matrix a = cw * m.U.transpose() * psi_inv.asDiagonal();  // rc x d
  const Matrix av = a * m.V;                                       // rc x rs

  Matrix rxy = Matrix::Zero(d, r), ryy = Matrix::Zero(r, r);
  Vector sxx = Vector::Zero(d);
  for (const auto& idx : internal::GroupBySpeaker(labels)) {
    const double n = static_cast<double>(idx.size());
    Vector sum = Vector::Zero(d);
    for (Eigen::Index i : idx) sum += x.row(i).transpose() - m.mu;
    Matrix p = n * vwv;
    p.diagonal().array() += 1.0;
    const Matrix ch = internal::CheckedLlt(p, "speaker posterior precision").solve(Matrix::Identity(rs, rs));
    const Vector mh = ch * (wv.transpose() * sum);
    const Matrix cross = -ch * av.transpose();                  // Cov(h, w_j)
    const Matrix cov_w = cw + av * ch * av.transpose();         // Cov(w_j)

    ryy.topLeftCorner(rs, rs) += n * (ch + mh * mh.transpose());
    for (Eigen::Index i : idx) {
      const Vector c = x.row(i).transpose() - m.mu;
      sxx += c.cwiseProduct(c);
      rxy.leftCols(rs) += c * mh.transpose();
      if (rc == 0) continue;
      const Vector mw = a * (c - m.V * mh);
      rxy.rightCols(rc) += c * mw.transpose();
      const Matrix hw = cross + mh * mw.transpose();
      ryy.topRightCorner(rs, rc) += hw;
      ryy.bottomLeftCorner(rc, rs) += hw.transpose();
      ryy.bottomRightCorner(rc, rc) += cov_w + mw * mw.transpose();
    }
  }
  const Matrix f = internal::CheckedLlt(ryy, "latent second moment").solve(rxy.transpose()).transpose();
  PldaModel out = m;
  out.V = f.leftCols(rs);
  out.U = f.rightCols(rc);
  const double n_total = static_cast<double>(x.rows());
  const Vector explained = (f.cwiseProduct(rxy)).rowwise().sum();
  out.psi = ((sxx - explained) / n_total).cwiseMax(1e-10 * sxx.mean() / n_total);
  return out;
}

/// Fits the two-subspace PLDA model by EM. Embeddings are rows of x and
/// must already be preprocessed.
inline PldaTrainResult TrainPlda(const Matrix& x, const std::vector<int>& labels, const PldaConfig& cfg) {
  const Eigen::Index d = x.cols();
  Require(static_cast<std::size_t>(x.rows()) == labels.size() && x.rows() > 0,
          "one speaker label per embedding required");
  Require(cfg.speaker_rank >= 1 && cfg.channel_rank >= 0, "invalid PLDA ranks");
  if (cfg.speaker_rank > d || cfg.channel_rank > d)
    Fail("PLDA rank exceeds embedding dimension " + std::to_string(d));
  Require(cfg.em_iterations >= 1, "em_iterations must be >= 1");
  if (internal::GroupBySpeaker(labels).size() < 2) Fail("PLDA needs at least 2 speakers");

  PldaModel m;
  m.mu = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - m.mu.transpose();
  const Vector var = centered.colwise().squaredNorm().transpose() / static_cast<double>(x.rows());
  // Seeded Gaussian directions pushed once through the between / within
  // speaker scatter (one power-iteration step), columns rescaled so that
  // trace(VV') and trace(UU') match the scatters. Pure random starts need
  // far more than a few dozen iterations to find the speaker subspace.
  const auto groups = internal::GroupBySpeaker(labels);
  Matrix sb = Matrix::Zero(d, d);
  for (const auto& idx : groups) {
    Vector mean = Vector::Zero(d);
    for (Eigen::Index i : idx) mean += centered.row(i).transpose();
    mean /= static_cast<double>(idx.size());
    sb += static_cast<double>(idx.size()) * mean * mean.transpose();
  }
  sb /= static_cast<double>(x.rows());
  const Matrix sw = centered.transpose() * centered / static_cast<double>(x.rows()) - sb;
  auto draw = [&](const Matrix& scatter, int rank, const char* purpose) {
    Rng rng = Rng::Stream(cfg.seed, purpose);
    Matrix g = Matrix::NullaryExpr(d, rank, [&] { return rng.Normal(); });
    if (rank == 0) return g;
    g = scatter * g;
    const double target = std::sqrt(std::max(scatter.trace(), 1e-10) / rank);
    for (Eigen::Index k = 0; k < g.cols(); ++k) {
      const double n = g.col(k).norm();
      g.col(k) *= n > 0 ? target / n : 0.0;
    }
    return g;
  };
  m.V = draw(sb, cfg.speaker_rank, "plda.V");
  m.U = draw(sw, cfg.channel_rank, "plda.U");
  m.psi = var.cwiseMax(1e-10);

  PldaTrainResult result;
  for (int it = 0; it < cfg.em_iterations; ++it) {
    result.log_likelihood.push_back(PldaLogLikelihood(m, x, labels));
    m = PldaEmStep(m, x, labels);
  }
  result.log_likelihood.push_back(PldaLogLikelihood(m, x, labels));
  result.model = std::move(m);
  return result;
}

/// Same-vs-different speaker log-likelihood ratio in two-covariance form,
/// with between covariance B = V V' and within covariance W = U U' + Psi.
class PldaScorer {
 public:
  explicit PldaScorer(const PldaModel& m) : mu_(m.mu) {
    const Eigen::Index d = m.dim();
    const Matrix w = m.Within();
    internal::CheckedLlt(w, "within-class covariance");
    const Matrix b = m.Between();
    const Matrix t = b + w;
    const auto t_llt = internal::CheckedLlt(t, "total covariance");
    const Matrix t_inv = t_llt.solve(Matrix::Identity(d, d));
    // T - B T^-1 B, rewritten as W + B T^-1 W to avoid cancellation when W
    // is small.
    Matrix schur = w + b * t_llt.solve(w);
    schur = 0.5 * (schur + schur.transpose()).eval();
    const auto s_llt = internal::CheckedLlt(schur, "conditional covariance");
    const Matrix s_inv = s_llt.solve(Matrix::Identity(d, d));
    quad_ = s_inv - t_inv;
    quad_ = 0.5 * (quad_ + quad_.transpose()).eval();
    cross_ = -t_inv * b * s_inv;
    cross_ = 0.5 * (cross_ + cross_.transpose()).eval();
    offset_ = -0.5 * (internal::LogDet(s_llt) - internal::LogDet(t_llt));
  }

  double Llr(const Eigen::Ref<const Vector>& enroll, const Eigen::Ref<const Vector>& test) const {
    Require(enroll.size() == mu_.size() && test.size() == mu_.size(), "embedding dim mismatch");
    const Vector e = enroll - mu_, t = test - mu_;
    return -0.5 * (e.dot(quad_ * e) + t.dot(quad_ * t)) - e.dot(cross_ * t) + offset_;
  }

 private:
  Vector mu_;
  Matrix quad_, cross_;
  double offset_ = 0;
};

inline double PldaLlr(const PldaModel& m, const Eigen::Ref<const Vector>& enroll,
                      const Eigen::Ref<const Vector>& test) {
  return PldaScorer(m).Llr(enroll, test);
}

}  // namespace svkit::backend

#endif  // SVKIT_PLDA_HPP_

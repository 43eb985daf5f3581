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

#ifndef SVKIT_AAM_HPP_
#define SVKIT_AAM_HPP_

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "svkit/common.hpp"
#include "svkit/rng.hpp"
#include "svkit/tensor.hpp"

namespace svkit::aam {

struct AamConfig {
  double scale = 30.0;
  double margin = 0.2;  // radians
};

inline void ValidateConfig(const AamConfig& cfg) {
  Require(cfg.scale > 0, "AAM scale must be positive");
  Require(cfg.margin >= 0 && cfg.margin < std::numbers::pi / 2, "AAM margin must be in [0, pi/2)");
}

/// Class-weight matrix, one row per class.
struct AamHead {
  Matrix weight;
  int num_classes() const { return static_cast<int>(weight.rows()); }
  int dim() const { return static_cast<int>(weight.cols()); }
};

/// Margin-adjusted true-class cosine: cos(theta + m) while theta + m < pi,
/// else the monotone extension cos(theta) - m sin(m).
inline double MarginCosine(double cosine, double m) {
  if (cosine > std::cos(std::numbers::pi - m)) {
    const double sine = std::sqrt(std::max(0.0, 1.0 - cosine * cosine));
    return cosine * std::cos(m) - sine * std::sin(m);
  }
  return cosine - m * std::sin(m);
}

/// d MarginCosine / d cosine.
inline double MarginCosineSlope(double cosine, double m) {
  if (cosine > std::cos(std::numbers::pi - m)) {
    const double sine = std::max(1e-12, std::sqrt(std::max(0.0, 1.0 - cosine * cosine)));
    return std::cos(m) + cosine * std::sin(m) / sine;
  }
  return 1.0;
}

namespace internal {

inline double CheckedNorm(const Eigen::Ref<const Vector>& v) {
  const double n = v.norm();
  if (!(n > 0) || !std::isfinite(n)) Fail("degenerate norm");
  return n;
}

/// Cosines between one embedding and every class row.
inline Vector Cosines(const Eigen::Ref<const Vector>& emb, const AamHead& head) {
  const double ne = CheckedNorm(emb);
  Vector c(head.num_classes());
  for (int j = 0; j < head.num_classes(); ++j)
    c[j] = head.weight.row(j).dot(emb) / (ne * CheckedNorm(head.weight.row(j).transpose()));
  return c;
}

inline double LogSumExp(const Vector& z) {
  const double mx = z.maxCoeff();
  return mx + std::log((z.array() - mx).exp().sum());
}

}  // namespace internal

/// Scaled cosine logits with the additive angular margin on the true class.
inline Vector AamLogits(const Eigen::Ref<const Vector>& emb, const AamHead& head, int label,
                        const AamConfig& cfg = {}) {
  ValidateConfig(cfg);
  Require(label >= 0 && label < head.num_classes(), "label out of range");
  Require(emb.size() == head.dim(), "embedding dim mismatch");
  Vector z = internal::Cosines(emb, head);
  z[label] = MarginCosine(z[label], cfg.margin);
  return cfg.scale * z;
}

/// Mean cross-entropy over AAM logits. Rows of `embeddings` are examples.
inline double AamLoss(const Matrix& embeddings, const std::vector<int>& labels,
                      const AamHead& head, const AamConfig& cfg = {}) {
  Require(embeddings.rows() > 0 && static_cast<std::size_t>(embeddings.rows()) == labels.size(),
          "AAM batch must be non-empty with one label per row");
  double loss = 0;
  for (Eigen::Index i = 0; i < embeddings.rows(); ++i) {
    const Vector z = AamLogits(embeddings.row(i).transpose(), head, labels[i], cfg);
    loss += internal::LogSumExp(z) - z[labels[i]];
  }
  return loss / static_cast<double>(embeddings.rows());
}

struct AamGradient {
  double loss = 0;
  Matrix head;        // d loss / d head.weight
  Matrix embeddings;  // d loss / d embeddings
};

/// Loss and exact gradients through normalization, margin, scale and
/// cross-entropy. Per-example terms are summed in index order.
inline AamGradient AamGrad(const Matrix& embeddings, const std::vector<int>& labels,
                           const AamHead& head, const AamConfig& cfg = {}) {
  Require(embeddings.rows() > 0 && static_cast<std::size_t>(embeddings.rows()) == labels.size(),
          "AAM batch must be non-empty with one label per row");
  ValidateConfig(cfg);
  const int n_cls = head.num_classes();
  const double inv_batch = 1.0 / static_cast<double>(embeddings.rows());
  AamGradient g;
  g.head = Matrix::Zero(head.weight.rows(), head.weight.cols());
  g.embeddings = Matrix::Zero(embeddings.rows(), embeddings.cols());

  Vector w_norm(n_cls);
  Matrix w_unit(n_cls, head.dim());
  for (int j = 0; j < n_cls; ++j) {
    w_norm[j] = internal::CheckedNorm(head.weight.row(j).transpose());
    w_unit.row(j) = head.weight.row(j) / w_norm[j];
  }
  for (Eigen::Index i = 0; i < embeddings.rows(); ++i) {
    const int y = labels[i];
    Require(y >= 0 && y < n_cls, "label out of range");
    const Vector e = embeddings.row(i).transpose();
    const double ne = internal::CheckedNorm(e);
    const Vector e_unit = e / ne;
    const Vector c = w_unit * e_unit;
    Vector z = cfg.scale * c;
    z[y] = cfg.scale * MarginCosine(c[y], cfg.margin);
    const double lse = internal::LogSumExp(z);
    g.loss += (lse - z[y]) * inv_batch;

    // d loss / d cosine_j
    Vector dc = (z.array() - lse).exp().matrix();
    dc[y] -= 1.0;
    dc *= cfg.scale * inv_batch;
    dc[y] *= MarginCosineSlope(c[y], cfg.margin);

    Vector de = Vector::Zero(e.size());
    for (int j = 0; j < n_cls; ++j) {
      de += dc[j] * (w_unit.row(j).transpose() - c[j] * e_unit);
      g.head.row(j) += dc[j] / w_norm[j] * (e_unit - c[j] * w_unit.row(j).transpose()).transpose();
    }
    g.embeddings.row(i) = de.transpose() / ne;
  }
  return g;
}

/// Random head: rows uniform in +-sqrt(6 / dim).
inline AamHead InitHead(int num_classes, int dim, std::uint64_t seed) {
  Require(num_classes >= 1 && dim >= 1, "invalid head shape");
  Rng rng = Rng::Stream(seed, "aam.weight");
  const double bound = std::sqrt(6.0 / dim);
  AamHead head;
  head.weight = Matrix::NullaryExpr(num_classes, dim, [&] { return rng.Uniform(-bound, bound); });
  return head;
}

struct FinetuneResult {
  AamHead head;
  std::vector<double> loss_trace;  // initial loss, then one entry per epoch
};

/// Full-batch gradient descent on the head only; embeddings stay frozen.
inline FinetuneResult FinetuneHead(const Matrix& embeddings, const std::vector<int>& labels,
                                   const AamConfig& cfg, int epochs, double learning_rate,
                                   std::uint64_t seed) {
  Require(epochs >= 0 && learning_rate > 0, "invalid training schedule");
  Require(!labels.empty(), "no training examples");
  const int n_cls = *std::max_element(labels.begin(), labels.end()) + 1;
  Require(n_cls >= 2, "need at least 2 classes");
  std::vector<int> counts(n_cls, 0);
  for (int l : labels) {
    Require(l >= 0, "negative label");
    ++counts[l];
  }
  for (int c : counts) Require(c >= 1, "every class needs at least one example");

  FinetuneResult out;
  out.head = InitHead(n_cls, static_cast<int>(embeddings.cols()), seed);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const AamGradient g = AamGrad(embeddings, labels, out.head, cfg);
    out.loss_trace.push_back(g.loss);
    out.head.weight -= learning_rate * g.head;
  }
  out.loss_trace.push_back(AamLoss(embeddings, labels, out.head, cfg));
  return out;
}

/// Class with the highest cosine (margin-free inference).
inline int Predict(const AamHead& head, const Eigen::Ref<const Vector>& emb) {
  Eigen::Index best;
  internal::Cosines(emb, head).maxCoeff(&best);
  return static_cast<int>(best);
}

inline TensorStore HeadToTensors(const AamHead& head) {
  TensorStore s;
  s.Set("aam.weight", Tensor::FromMatrix(head.weight));
  return s;
}

inline AamHead HeadFromTensors(const TensorStore& s) {
  return AamHead{s.Get("aam.weight").ToMatrix()};
}

}  // namespace svkit::aam

#endif  // SVKIT_AAM_HPP_

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

#ifndef SVKIT_NNET_HPP_
#define SVKIT_NNET_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "svkit/common.hpp"
#include "svkit/features.hpp"
#include "svkit/rng.hpp"
#include "svkit/tensor.hpp"

namespace svkit::nnet {

using MatrixF = Eigen::MatrixXf;
using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Weights = TensorStore;

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kStatsVarianceFloor = 1e-10;
inline constexpr int kTrainingCropFrames = 200;

enum class Arch { kTdnnStandard, kTdnnBig, kTdnnBigResidual, kResnet34, kTdnnCustom, kResnetCustom };

inline std::string ArchName(Arch a) {
  switch (a) {
    case Arch::kTdnnStandard: return "tdnn-standard";
    case Arch::kTdnnBig: return "tdnn-big";
    case Arch::kTdnnBigResidual: return "tdnn-big-residual";
    case Arch::kResnet34: return "resnet34";
    case Arch::kTdnnCustom: return "tdnn-custom";
    case Arch::kResnetCustom: return "resnet-custom";
  }
  return "?";
}

inline Arch ParseArch(const std::string& s) {
  for (Arch a : {Arch::kTdnnStandard, Arch::kTdnnBig, Arch::kTdnnBigResidual, Arch::kResnet34})
    if (ArchName(a) == s) return a;
  Fail("unknown architecture '" + s + "'");
}

struct TdnnLayer {
  std::string name;
  std::vector<int> offsets;
  int output_dim = 0;
  bool residual = false;  // output = layer(x) + x
};

struct ResnetStage {
  int blocks = 0;
  int channels = 0;
  int stride = 1;
};

/// Declarative extractor topology.
struct NetworkSpec {
  Arch arch = Arch::kTdnnStandard;
  int input_dim = 40;
  int embedding_dim = 512;
  int num_classes = 2;
  // TDNN
  std::vector<TdnnLayer> frame_layers;
  int segment2_dim = 512;
  // ResNet
  int stem_channels = 32;
  std::vector<ResnetStage> stages;

  bool IsTdnn() const {
    return arch == Arch::kTdnnStandard || arch == Arch::kTdnnBig ||
           arch == Arch::kTdnnBigResidual || arch == Arch::kTdnnCustom;
  }
};

/// Table topologies. embedding_dim = 0 selects the default (512 TDNN, 256 ResNet).
inline NetworkSpec MakeSpec(Arch arch, int input_dim, int num_classes, int embedding_dim = 0) {
  NetworkSpec s;
  s.arch = arch;
  s.input_dim = input_dim;
  s.num_classes = num_classes;
  if (arch == Arch::kResnet34) {
    s.embedding_dim = embedding_dim > 0 ? embedding_dim : 256;
    s.stem_channels = 32;
    s.stages = {{3, 32, 1}, {4, 64, 2}, {6, 128, 2}, {3, 256, 2}};
    return s;
  }
  Require(arch != Arch::kTdnnCustom && arch != Arch::kResnetCustom,
          "custom architectures are built field by field");
  s.embedding_dim = embedding_dim > 0 ? embedding_dim : 512;
  const bool big = arch != Arch::kTdnnStandard;
  const int w = big ? 1024 : 512;
  const bool res = arch == Arch::kTdnnBigResidual;
  const std::vector<int> frame3 = big ? std::vector<int>{-4, -2, 0, 2, 4} : std::vector<int>{-2, 0, 2};
  s.frame_layers = {
      {"frame1", {-2, -1, 0, 1, 2}, w, false},
      {"frame2", {0}, w, res},
      {"frame3", frame3, w, false},
      {"frame4", {0}, w, res},
      {"frame5", {-3, 0, 3}, w, false},
      {"frame6", {0}, w, res},
      {"frame7", {-4, 0, 4}, w, false},
      {"frame8", {0}, w, res},
      {"frame9", {0}, big ? 2000 : 1500, false},
  };
  s.segment2_dim = 512;
  return s;
}

inline void ValidateSpec(const NetworkSpec& s) {
  Require(s.input_dim >= 1 && s.embedding_dim >= 1, "invalid network dims");
  Require(s.num_classes >= 2, "num_classes must be >= 2");
  if (s.IsTdnn()) {
    Require(!s.frame_layers.empty(), "TDNN needs frame layers");
    int dim = s.input_dim;
    for (const auto& l : s.frame_layers) {
      Require(!l.offsets.empty() && l.output_dim >= 1, "invalid layer " + l.name);
      Require(!l.residual || l.output_dim == dim, "residual layer must keep dim: " + l.name);
      dim = l.output_dim;
    }
  } else {
    Require(!s.stages.empty() && s.stem_channels >= 1, "ResNet needs stages");
    for (const auto& st : s.stages)
      Require(st.blocks >= 1 && st.channels >= 1 && st.stride >= 1, "invalid ResNet stage");
  }
}

/// Output size of a 3x3 (pad 1) or 1x1 (pad 0) convolution with the given stride.
inline int ConvOut(int n, int stride) { return (n - 1) / stride + 1; }

inline int ResnetFinalFreq(const NetworkSpec& s) {
  int f = s.input_dim;
  for (const auto& st : s.stages) f = ConvOut(f, st.stride);
  return f;
}

/// (name, shape) of every parameter tensor the spec requires, in a fixed order.
inline std::vector<std::pair<std::string, std::vector<std::uint32_t>>> ParameterShapes(
    const NetworkSpec& s) {
  ValidateSpec(s);
  using Dims = std::vector<std::uint32_t>;
  std::vector<std::pair<std::string, Dims>> out;
  auto u = [](int v) { return static_cast<std::uint32_t>(v); };
  auto bn = [&](const std::string& p, int n) {
    for (const char* f : {"gamma", "beta", "mean", "var"}) out.push_back({p + "." + f, {u(n)}});
  };
  if (s.IsTdnn()) {
    int dim = s.input_dim;
    for (const auto& l : s.frame_layers) {
      out.push_back({l.name + ".weight", {u(l.output_dim), u(dim * static_cast<int>(l.offsets.size()))}});
      out.push_back({l.name + ".bias", {u(l.output_dim)}});
      bn(l.name + ".bn", l.output_dim);
      dim = l.output_dim;
    }
    out.push_back({"segment1.weight", {u(s.embedding_dim), u(2 * dim)}});
    out.push_back({"segment1.bias", {u(s.embedding_dim)}});
    bn("segment1.bn", s.embedding_dim);
    out.push_back({"segment2.weight", {u(s.segment2_dim), u(s.embedding_dim)}});
    out.push_back({"segment2.bias", {u(s.segment2_dim)}});
    bn("segment2.bn", s.segment2_dim);
    out.push_back({"output.weight", {u(s.num_classes), u(s.segment2_dim)}});
    out.push_back({"output.bias", {u(s.num_classes)}});
    return out;
  }
  out.push_back({"stem.conv", {u(s.stem_channels), 1, 3, 3}});
  bn("stem.bn", s.stem_channels);
  int in = s.stem_channels;
  for (std::size_t si = 0; si < s.stages.size(); ++si) {
    const auto& st = s.stages[si];
    for (int b = 0; b < st.blocks; ++b) {
      const std::string p = "stage" + std::to_string(si + 1) + ".block" + std::to_string(b + 1);
      const int stride = b == 0 ? st.stride : 1;
      out.push_back({p + ".conv1", {u(st.channels), u(in), 3, 3}});
      bn(p + ".bn1", st.channels);
      out.push_back({p + ".conv2", {u(st.channels), u(st.channels), 3, 3}});
      bn(p + ".bn2", st.channels);
      if (stride != 1 || in != st.channels) {
        out.push_back({p + ".shortcut.conv", {u(st.channels), u(in), 1, 1}});
        bn(p + ".shortcut.bn", st.channels);
      }
      in = st.channels;
    }
  }
  const int pooled = 2 * in * ResnetFinalFreq(s);
  out.push_back({"dense1.weight", {u(s.embedding_dim), u(pooled)}});
  out.push_back({"dense1.bias", {u(s.embedding_dim)}});
  out.push_back({"dense2.weight", {u(s.num_classes), u(s.embedding_dim)}});
  out.push_back({"dense2.bias", {u(s.num_classes)}});
  return out;
}

/// Uniform(+-sqrt(6 / fan_in)) for weight matrices and kernels, zero biases,
/// identity batch-norm. Each tensor has its own stream keyed by name.
inline Weights InitWeights(const NetworkSpec& spec, std::uint64_t seed) {
  Weights w;
  for (const auto& [name, dims] : ParameterShapes(spec)) {
    Tensor t(dims);
    const auto ends_with = [&](const char* suffix) {
      const std::string s(suffix);
      return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0;
    };
    if (dims.size() >= 2) {
      std::size_t fan_in = 1;
      for (std::size_t i = 1; i < dims.size(); ++i) fan_in *= dims[i];
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
      Rng rng = Rng::Stream(seed, name);
      for (auto& v : t.data) v = static_cast<float>(rng.Uniform(-bound, bound));
    } else if (ends_with(".gamma") || ends_with(".var")) {
      std::fill(t.data.begin(), t.data.end(), 1.0f);
    }
    w.Set(name, std::move(t));
  }
  return w;
}

/// Checks that every required tensor exists with the right shape.
inline void CheckWeights(const NetworkSpec& spec, const Weights& w) {
  for (const auto& [name, dims] : ParameterShapes(spec)) {
    const Tensor& t = w.Get(name, dims);
    for (float v : t.data)
      if (!std::isfinite(v)) Fail("weights mismatch: non-finite entry in " + name);
  }
}

inline void SaveWeights(const std::string& path, const Weights& w) { SaveTensors(path, w); }
inline Weights LoadWeights(const std::string& path) { return LoadTensors(path); }

/// Utterance embedding with the tag of the architecture that produced it.
struct Embedding {
  Vector values;
  std::string arch;
};

/// One row of a shape audit: layer name and its (input, output) or output dims.
struct LayerShape {
  std::string name;
  std::vector<int> dims;
  bool operator==(const LayerShape&) const = default;
};
using ShapeTrace = std::vector<LayerShape>;

/// Frame splicing with replicate padding: row t of the output concatenates
/// input rows clamp(t + o) for each offset o.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> Splice(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& x,
    const std::vector<int>& offsets) {
  const Eigen::Index n = x.rows(), d = x.cols();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(n, d * static_cast<Eigen::Index>(offsets.size()));
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    for (Eigen::Index t = 0; t < n; ++t) {
      const Eigen::Index src = std::clamp<Eigen::Index>(t + offsets[k], 0, n - 1);
      out.block(t, static_cast<Eigen::Index>(k) * d, 1, d) = x.row(src);
    }
  }
  return out;
}

inline FeatureMatrix Splice(const FeatureMatrix& feats, const std::vector<int>& offsets) {
  Require(feats.rows() > 0, "splice needs at least one frame");
  FeatureMatrix out = feats;
  out.values = Splice<double>(feats.values, offsets);
  return out;
}

/// Mean and population standard deviation of each column (rows are frames),
/// accumulated in double. std = sqrt(E[(x - E[x])^2] + 1e-10).
template <typename Derived>
Vector StatsPooling(const Eigen::MatrixBase<Derived>& frames) {
  Require(frames.rows() >= 1, "stats pooling needs at least one frame");
  const Eigen::Index d = frames.cols();
  Vector sum = Vector::Zero(d), sum_sq = Vector::Zero(d);
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    for (Eigen::Index j = 0; j < d; ++j) {
      sum[j] += static_cast<double>(frames(t, j));
    }
  }
  const double n = static_cast<double>(frames.rows());
  Vector out(2 * d);
  for (Eigen::Index j = 0; j < d; ++j) out[j] = sum[j] / n;
  // Second pass on centered values; exact zero variance for constant input.
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const double c = static_cast<double>(frames(t, j)) - out[j];
      sum_sq[j] += c * c;
    }
  }
  for (Eigen::Index j = 0; j < d; ++j)
    out[d + j] = std::sqrt(std::max(sum_sq[j] / n, 0.0) + kStatsVarianceFloor);
  return out;
}

inline Vector StatsPooling(const FeatureMatrix& frames) { return StatsPooling(frames.values); }

namespace internal {

inline Eigen::Map<const RowMatrixF> AsMatrix(const Tensor& t, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const RowMatrixF>(t.data.data(), rows, cols);
}

inline Eigen::Map<const Eigen::VectorXf> AsVector(const Tensor& t) {
  return Eigen::Map<const Eigen::VectorXf>(t.data.data(), static_cast<Eigen::Index>(t.data.size()));
}

/// Inference batch norm. Channels run along rows when per_row, else along columns.
inline void BatchNorm(const Weights& w, const std::string& prefix, int n, MatrixF& x, bool per_row) {
  const auto u = static_cast<std::uint32_t>(n);
  const auto gamma = AsVector(w.Get(prefix + ".gamma", {u}));
  const auto beta = AsVector(w.Get(prefix + ".beta", {u}));
  const auto mean = AsVector(w.Get(prefix + ".mean", {u}));
  const auto var = AsVector(w.Get(prefix + ".var", {u}));
  Eigen::VectorXf scale(n), shift(n);
  for (int i = 0; i < n; ++i) {
    scale[i] = static_cast<float>(gamma[i] / std::sqrt(static_cast<double>(var[i]) + kBatchNormEpsilon));
    shift[i] = beta[i] - scale[i] * mean[i];
  }
  if (per_row) {
    x = (scale.asDiagonal() * x).colwise() + shift;
  } else {
    x = (x * scale.asDiagonal()).rowwise() + shift.transpose();
  }
}

/// Feature map: channels x (height * width), height = frequency, width = time.
struct FeatureMap {
  MatrixF data;
  int height = 0, width = 0;
};

/// 3x3 (pad 1) or 1x1 (pad 0) convolution via im2col.
inline FeatureMap Conv(const FeatureMap& in, const Tensor& kernel, int stride) {
  const int cout = static_cast<int>(kernel.dims[0]), cin = static_cast<int>(kernel.dims[1]);
  const int k = static_cast<int>(kernel.dims[2]), pad = k / 2;
  FeatureMap out;
  out.height = ConvOut(in.height, stride);
  out.width = ConvOut(in.width, stride);
  const int positions = out.height * out.width;
  MatrixF cols = MatrixF::Zero(cin * k * k, positions);
  for (int c = 0; c < cin; ++c) {
    for (int kh = 0; kh < k; ++kh) {
      for (int kw = 0; kw < k; ++kw) {
        const int row = (c * k + kh) * k + kw;
        for (int oh = 0; oh < out.height; ++oh) {
          const int ih = oh * stride + kh - pad;
          if (ih < 0 || ih >= in.height) continue;
          for (int ow = 0; ow < out.width; ++ow) {
            const int iw = ow * stride + kw - pad;
            if (iw < 0 || iw >= in.width) continue;
            cols(row, oh * out.width + ow) = in.data(c, ih * in.width + iw);
          }
        }
      }
    }
  }
  out.data.noalias() = AsMatrix(kernel, cout, cin * k * k) * cols;
  return out;
}

}  // namespace internal

/// TDNN x-vector: per frame layer splice -> affine -> ReLU -> batch norm
/// (plus identity skip on residual layers), stats pooling, then the
/// segment1 affine output before its nonlinearity.
inline Embedding ForwardTdnn(const FeatureMatrix& feats, const NetworkSpec& spec,
                             const Weights& w, ShapeTrace* trace = nullptr) {
  Require(spec.IsTdnn(), "not a TDNN spec");
  ValidateSpec(spec);
  if (feats.cols() != spec.input_dim) Fail("feature dim mismatch");
  Require(feats.rows() >= 1, "need at least one frame");
  CheckWeights(spec, w);

  MatrixF x = feats.values.cast<float>();
  for (const auto& l : spec.frame_layers) {
    const MatrixF spliced = Splice<float>(x, l.offsets);
    const Tensor& wt = w.Get(l.name + ".weight");
    // Frames on the column axis, padded to a multiple of 8 columns: every
    // frame then takes the same GEMM kernel path, so identical frames give
    // bit-identical outputs.
    const Eigen::Index frames = spliced.rows(), padded = (frames + 7) / 8 * 8;
    MatrixF cols(spliced.cols(), padded);
    cols.leftCols(frames) = spliced.transpose();
    cols.rightCols(padded - frames).setZero();
    MatrixF yt = (internal::AsMatrix(wt, l.output_dim, spliced.cols()) * cols).leftCols(frames);
    yt.colwise() += internal::AsVector(w.Get(l.name + ".bias"));
    yt = yt.cwiseMax(0.0f);
    internal::BatchNorm(w, l.name + ".bn", l.output_dim, yt, true);
    MatrixF y = yt.transpose();
    if (l.residual) y += x;
    if (trace) trace->push_back({l.name, {static_cast<int>(spliced.cols()), l.output_dim}});
    x = std::move(y);
  }
  const Vector stats = StatsPooling(x);
  if (trace) trace->push_back({"stats pooling", {static_cast<int>(x.cols()), static_cast<int>(stats.size())}});
  const Tensor& seg = w.Get("segment1.weight");
  Embedding emb;
  emb.values = internal::AsMatrix(seg, spec.embedding_dim, stats.size()).cast<double>() * stats +
               internal::AsVector(w.Get("segment1.bias")).cast<double>();
  emb.arch = ArchName(spec.arch);
  if (trace) trace->push_back({"segment1", {static_cast<int>(stats.size()), spec.embedding_dim}});
  return emb;
}

/// ResNet r-vector: 3x3 stem, residual stages of basic blocks, mean+std
/// pooling over time for every (channel, frequency) cell, dense to the
/// embedding (pre-activation).
inline Embedding ForwardResnet(const FeatureMatrix& feats, const NetworkSpec& spec,
                               const Weights& w, ShapeTrace* trace = nullptr) {
  Require(!spec.IsTdnn(), "not a ResNet spec");
  ValidateSpec(spec);
  if (feats.cols() != spec.input_dim) Fail("feature dim mismatch");
  if (feats.rows() < 8) Fail("ResNet needs at least 8 frames");
  CheckWeights(spec, w);
  using internal::FeatureMap;
  auto record = [&](const std::string& name, const FeatureMap& m) {
    if (trace) trace->push_back({name, {m.height, m.width, static_cast<int>(m.data.rows())}});
  };

  FeatureMap x;
  x.height = static_cast<int>(feats.cols());
  x.width = static_cast<int>(feats.rows());
  x.data.resize(1, x.height * x.width);
  for (int f = 0; f < x.height; ++f)
    for (int t = 0; t < x.width; ++t) x.data(0, f * x.width + t) = static_cast<float>(feats.values(t, f));
  record("input", x);

  x = internal::Conv(x, w.Get("stem.conv"), 1);
  internal::BatchNorm(w, "stem.bn", spec.stem_channels, x.data, true);
  x.data = x.data.cwiseMax(0.0f);
  record("conv2d-1", x);

  int in = spec.stem_channels;
  for (std::size_t si = 0; si < spec.stages.size(); ++si) {
    const auto& st = spec.stages[si];
    for (int b = 0; b < st.blocks; ++b) {
      const std::string p = "stage" + std::to_string(si + 1) + ".block" + std::to_string(b + 1);
      const int stride = b == 0 ? st.stride : 1;
      FeatureMap y = internal::Conv(x, w.Get(p + ".conv1"), stride);
      internal::BatchNorm(w, p + ".bn1", st.channels, y.data, true);
      y.data = y.data.cwiseMax(0.0f);
      y = internal::Conv(y, w.Get(p + ".conv2"), 1);
      internal::BatchNorm(w, p + ".bn2", st.channels, y.data, true);
      if (stride != 1 || in != st.channels) {
        FeatureMap sc = internal::Conv(x, w.Get(p + ".shortcut.conv"), stride);
        internal::BatchNorm(w, p + ".shortcut.bn", st.channels, sc.data, true);
        y.data += sc.data;
      } else {
        y.data += x.data;
      }
      y.data = y.data.cwiseMax(0.0f);
      x = std::move(y);
      in = st.channels;
    }
    record("resnetblock-" + std::to_string(si + 1), x);
  }

  // Pool over time: rows are (channel, frequency) cells.
  const int cells = in * x.height;
  MatrixF by_time(x.width, cells);
  for (int c = 0; c < in; ++c)
    for (int f = 0; f < x.height; ++f)
      for (int t = 0; t < x.width; ++t) by_time(t, c * x.height + f) = x.data(c, f * x.width + t);
  const Vector pooled = StatsPooling(by_time);
  if (trace) {
    trace->push_back({"statspooling", {2 * x.height, in}});
    trace->push_back({"flatten", {static_cast<int>(pooled.size())}});
  }
  Embedding emb;
  emb.values = internal::AsMatrix(w.Get("dense1.weight"), spec.embedding_dim, pooled.size()).cast<double>() * pooled +
               internal::AsVector(w.Get("dense1.bias")).cast<double>();
  emb.arch = ArchName(spec.arch);
  if (trace) trace->push_back({"dense1", {spec.embedding_dim}});
  return emb;
}

inline Embedding Forward(const FeatureMatrix& feats, const NetworkSpec& spec, const Weights& w) {
  return spec.IsTdnn() ? ForwardTdnn(feats, spec, w) : ForwardResnet(feats, spec, w);
}

/// Shape audit without arithmetic: the layer table for `frames` input frames.
/// TDNN rows are (input, output); ResNet rows are output shapes.
inline ShapeTrace DryRun(const NetworkSpec& spec, int frames) {
  ValidateSpec(spec);
  ShapeTrace out;
  if (spec.IsTdnn()) {
    int dim = spec.input_dim;
    for (const auto& l : spec.frame_layers) {
      out.push_back({l.name, {dim * static_cast<int>(l.offsets.size()), l.output_dim}});
      dim = l.output_dim;
    }
    out.push_back({"stats pooling", {dim, 2 * dim}});
    out.push_back({"segment1", {2 * dim, spec.embedding_dim}});
    out.push_back({"segment2", {spec.embedding_dim, spec.segment2_dim}});
    out.push_back({"softmax", {spec.segment2_dim, spec.num_classes}});
    return out;
  }
  int h = spec.input_dim, t = frames, c = spec.stem_channels;
  out.push_back({"input", {h, t, 1}});
  out.push_back({"conv2d-1", {h, t, c}});
  for (std::size_t si = 0; si < spec.stages.size(); ++si) {
    h = ConvOut(h, spec.stages[si].stride);
    t = ConvOut(t, spec.stages[si].stride);
    c = spec.stages[si].channels;
    out.push_back({"resnetblock-" + std::to_string(si + 1), {h, t, c}});
  }
  out.push_back({"statspooling", {2 * h, c}});
  out.push_back({"flatten", {2 * h * c}});
  out.push_back({"dense1", {spec.embedding_dim}});
  out.push_back({"dense2", {spec.num_classes}});
  return out;
}

/// Contiguous 200-frame slice starting at `start`.
inline FeatureMatrix TrainingCrop(const FeatureMatrix& feats, Eigen::Index start) {
  Require(start >= 0 && start + kTrainingCropFrames <= feats.rows(),
          "training crop out of range");
  FeatureMatrix out = feats;
  out.values = feats.values.middleRows(start, kTrainingCropFrames);
  return out;
}

}  // namespace svkit::nnet

#endif  // SVKIT_NNET_HPP_

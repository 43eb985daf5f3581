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

#ifndef SVKIT_TENSOR_HPP_
#define SVKIT_TENSOR_HPP_

#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "svkit/common.hpp"
#include "svkit/io.hpp"

namespace svkit {

/// Dense row-major float tensor.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::uint32_t> d)
      : dims(std::move(d)), data(NumElements(dims), 0.0f) {}

  static std::size_t NumElements(const std::vector<std::uint32_t>& d) {
    return std::accumulate(d.begin(), d.end(), std::size_t{1},
                           [](std::size_t a, std::uint32_t b) { return a * b; });
  }

  /// Copies a matrix (row-major) into a rank-2 tensor.
  static Tensor FromMatrix(const Matrix& m) {
    Tensor t({static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())});
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        t.data[r * m.cols() + c] = static_cast<float>(m(r, c));
    return t;
  }
  static Tensor FromVector(const Vector& v) {
    Tensor t({static_cast<std::uint32_t>(v.size())});
    for (Eigen::Index i = 0; i < v.size(); ++i) t.data[i] = static_cast<float>(v[i]);
    return t;
  }
  Matrix ToMatrix() const {
    Require(dims.size() == 2, "expected a rank-2 tensor");
    Matrix m(dims[0], dims[1]);
    for (std::uint32_t r = 0; r < dims[0]; ++r)
      for (std::uint32_t c = 0; c < dims[1]; ++c) m(r, c) = data[r * dims[1] + c];
    return m;
  }
  Vector ToVector() const {
    Vector v(static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) v[i] = data[i];
    return v;
  }

  bool operator==(const Tensor&) const = default;
};

/// Named tensor store. Iteration (and therefore file order) is by name.
class TensorStore {
 public:
  using Map = std::map<std::string, Tensor>;

  void Set(const std::string& name, Tensor t) { tensors_[name] = std::move(t); }
  bool Has(const std::string& name) const { return tensors_.count(name) > 0; }

  const Tensor& Get(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) Fail("weights mismatch: missing tensor " + name);
    return it->second;
  }

  /// Looks up a tensor and checks its shape.
  const Tensor& Get(const std::string& name,
                    const std::vector<std::uint32_t>& dims) const {
    const Tensor& t = Get(name);
    if (t.dims != dims) Fail("weights mismatch: bad shape for " + name);
    return t;
  }

  const Map& tensors() const { return tensors_; }
  std::size_t size() const { return tensors_.size(); }
  bool operator==(const TensorStore&) const = default;

 private:
  Map tensors_;
};

// SVW1 container: "SVW1", u32 count, then per tensor u16 name length, name,
// u8 rank, rank x u32 dims, f32 data (row-major).

inline std::string EncodeTensors(const TensorStore& store) {
  ByteWriter w;
  w.PutBytes("SVW1");
  w.Put<std::uint32_t>(static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, t] : store.tensors()) {
    Require(name.size() <= 0xffff && t.dims.size() <= 0xff, "tensor name/rank too large");
    w.Put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.PutBytes(name);
    w.Put<std::uint8_t>(static_cast<std::uint8_t>(t.dims.size()));
    for (auto d : t.dims) w.Put<std::uint32_t>(d);
    for (float v : t.data) w.Put<float>(v);
  }
  return w.bytes();
}

inline TensorStore DecodeTensors(std::string_view bytes) {
  ByteReader r(bytes, "bad weight file");
  if (r.GetBytes(4) != "SVW1") r.Bad();
  const auto count = r.Get<std::uint32_t>();
  TensorStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(r.GetBytes(r.Get<std::uint16_t>()));
    Tensor t;
    t.dims.resize(r.Get<std::uint8_t>());
    for (auto& d : t.dims) d = r.Get<std::uint32_t>();
    const std::size_t n = Tensor::NumElements(t.dims);
    if (n > bytes.size()) r.Bad();
    t.data.resize(n);
    for (auto& v : t.data) v = r.Get<float>();
    if (store.Has(name)) r.Bad();
    store.Set(name, std::move(t));
  }
  if (!r.AtEnd()) r.Bad();
  return store;
}

inline void SaveTensors(const std::string& path, const TensorStore& store) {
  WriteFile(path, EncodeTensors(store));
}

inline TensorStore LoadTensors(const std::string& path) {
  try {
    return DecodeTensors(ReadFile(path));
  } catch (const Error& e) {
    Fail(path + ": " + e.what());
  }
}

}  // namespace svkit

#endif  // SVKIT_TENSOR_HPP_

// core/nn/tensor.hpp

// Copyright 2026  The ufema authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef UFEMA_CORE_NN_TENSOR_HPP_
#define UFEMA_CORE_NN_TENSOR_HPP_

#include <array>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "core/common.hpp"

namespace ufema::nn {

// Dense row-major tensor. Layers are templated on the scalar so gradient
// checks can instantiate the exact same code in double precision.
template <class T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    v.assign(numel_of(shape), T(0));
  }

  static int64_t numel_of(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
  }
  int64_t numel() const { return static_cast<int64_t>(v.size()); }
  int dim(int i) const { return shape[size_t(i)]; }

  T* data() { return v.data(); }
  const T* data() const { return v.data(); }

  void zero() { std::fill(v.begin(), v.end(), T(0)); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

// A learnable tensor with its gradient accumulator.
template <class T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Param() = default;
  Param(std::string n, std::vector<int> shape)
      : name(std::move(n)), value(shape), grad(shape) {}

  void zero_grad() { grad.zero(); }
};

template <class T>
int64_t total_numel(const std::vector<Param<T>*>& ps) {
  int64_t n = 0;
  for (auto* p : ps) n += p->value.numel();
  return n;
}

template <class T>
std::vector<T> flatten_values(const std::vector<Param<T>*>& ps,
                              const std::vector<Tensor<T>*>& buffers = {}) {
  std::vector<T> out;
  for (auto* p : ps) out.insert(out.end(), p->value.v.begin(), p->value.v.end());
  for (auto* b : buffers) out.insert(out.end(), b->v.begin(), b->v.end());
  return out;
}

template <class T>
void unflatten_values(const std::vector<T>& flat, const std::vector<Param<T>*>& ps,
                      const std::vector<Tensor<T>*>& buffers = {}) {
  size_t off = 0;
  auto copy_into = [&](std::vector<T>& dst) {
    require(off + dst.size() <= flat.size(), ErrorCode::kCorruption,
            "flat parameter vector too short");
    std::copy(flat.begin() + off, flat.begin() + off + dst.size(), dst.begin());
    off += dst.size();
  };
  for (auto* p : ps) copy_into(p->value.v);
  for (auto* b : buffers) copy_into(b->v);
  require(off == flat.size(), ErrorCode::kCorruption,
          "flat parameter vector size mismatch");
}

template <class T>
uint64_t params_hash(const std::vector<Param<T>*>& ps,
                     const std::vector<Tensor<T>*>& buffers = {}) {
  auto flat = flatten_values(ps, buffers);
  return hash_values(flat);
}

}  // namespace ufema::nn

#endif  // UFEMA_CORE_NN_TENSOR_HPP_

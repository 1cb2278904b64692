// Copyright 2026 The repkd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "repkd/errors.hpp"

namespace repkd {

/// Dense row-major tensor of rank 1 or 2. Rank-2 tensors are indexed (row, col).
template <typename S>
class Tensor {
 public:
  using value_type = S;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, S fill = S(0))
      : dims_(std::move(dims)),
        data_(std::accumulate(dims_.begin(), dims_.end(), std::size_t{1},
                              std::multiplies<>()),
              fill) {}

  static Tensor vector(std::size_t n) { return Tensor({n}); }
  static Tensor matrix(std::size_t rows, std::size_t cols) {
    return Tensor({rows, cols});
  }

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t rows() const { return dims_.empty() ? 0 : dims_[0]; }
  std::size_t cols() const { return dims_.size() < 2 ? 1 : dims_[1]; }

  S* data() { return data_.data(); }
  const S* data() const { return data_.data(); }
  std::span<S> flat() { return data_; }
  std::span<const S> flat() const { return data_; }

  S& operator[](std::size_t i) { return data_[i]; }
  const S& operator[](std::size_t i) const { return data_[i]; }
  S& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  const S& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols() + c];
  }

  std::span<S> row(std::size_t r) {
    return std::span<S>(data_).subspan(r * cols(), cols());
  }
  std::span<const S> row(std::size_t r) const {
    return std::span<const S>(data_).subspan(r * cols(), cols());
  }

  void fill(S v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const Tensor& o) const { return dims_ == o.dims_; }

  template <typename T>
  Tensor<T> cast() const {
    Tensor<T> out(dims_);
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<T>(data_[i]);
    return out;
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.dims_ == b.dims_ && a.data_ == b.data_;
  }

 private:
  std::vector<std::size_t> dims_;
  std::vector<S> data_;
};

std::string shape_string(const std::vector<std::size_t>& dims);

namespace linalg {

// y += W x, W is (m x n).
template <typename S, typename X, typename Y>
inline void gemv_add(const Tensor<S>& w, std::span<const X> x, std::span<Y> y) {
  const std::size_t m = w.rows(), n = w.cols();
  const S* p = w.data();
  for (std::size_t i = 0; i < m; ++i, p += n) {
    Y acc = 0;
    for (std::size_t j = 0; j < n; ++j) acc += static_cast<Y>(p[j]) * static_cast<Y>(x[j]);
    y[i] += acc;
  }
}

// out += W^T g, W is (m x n).
template <typename S, typename G, typename O>
inline void gemv_t_add(const Tensor<S>& w, std::span<const G> g, std::span<O> out) {
  const std::size_t m = w.rows(), n = w.cols();
  const S* p = w.data();
  for (std::size_t i = 0; i < m; ++i, p += n) {
    const O gi = static_cast<O>(g[i]);
    if (gi == O(0)) continue;
    for (std::size_t j = 0; j < n; ++j) out[j] += static_cast<O>(p[j]) * gi;
  }
}

// W += g x^T.
template <typename S, typename G, typename X>
inline void outer_add(Tensor<S>& w, std::span<const G> g, std::span<const X> x) {
  const std::size_t m = w.rows(), n = w.cols();
  S* p = w.data();
  for (std::size_t i = 0; i < m; ++i, p += n) {
    const S gi = static_cast<S>(g[i]);
    if (gi == S(0)) continue;
    for (std::size_t j = 0; j < n; ++j) p[j] += gi * static_cast<S>(x[j]);
  }
}

}  // namespace linalg
}  // namespace repkd

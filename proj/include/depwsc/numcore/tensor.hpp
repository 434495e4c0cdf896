// Copyright 2026 The depwsc Authors
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
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "depwsc/error.hpp"

namespace depwsc::num {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& dims);
std::size_t shape_size(const Shape& dims);

/// Dense row-major tensor. Value type; rank 1 and 2 are what the encoder
/// uses, but any positive rank is accepted.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  /// Zero-filled tensor of the given extents.
  explicit Tensor(Shape dims) : dims_(std::move(dims)), data_(checked_size(dims_), T{0}) {}

  Tensor(Shape dims, std::vector<T> data) : dims_(std::move(dims)), data_(std::move(data)) {
    if (checked_size(dims_) != data_.size()) {
      throw ShapeError("tensor of dims " + shape_str(dims_) + " needs " +
                       std::to_string(shape_size(dims_)) + " values, got " +
                       std::to_string(data_.size()));
    }
  }

  static Tensor full(Shape dims, T value) {
    Tensor t(std::move(dims));
    for (auto& v : t.data_) v = value;
    return t;
  }

  static Tensor matrix(std::initializer_list<std::initializer_list<T>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<T> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw ShapeError("ragged matrix literal");
      data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
  }

  static Tensor vector(std::initializer_list<T> values) {
    return Tensor({values.size()}, std::vector<T>(values));
  }

  static Tensor scalar(T value) { return Tensor({1}, {value}); }

  const Shape& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  /// Rows/cols treat a rank-1 tensor as a single row.
  std::size_t rows() const noexcept { return dims_.size() == 2 ? dims_[0] : 1; }
  std::size_t cols() const noexcept { return dims_.empty() ? 0 : dims_.back(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  T operator[](std::size_t i) const noexcept { return data_[i]; }
  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols() + c]; }
  T operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols() + c]; }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return Tensor<U>(dims_, std::move(out));
  }

  bool operator==(const Tensor& other) const = default;

 private:
  static std::size_t checked_size(const Shape& dims) {
    for (std::size_t d : dims) {
      if (d == 0) throw ShapeError("tensor dims must be positive, got " + shape_str(dims));
    }
    return shape_size(dims);
  }

  Shape dims_;
  std::vector<T> data_;
};

}  // namespace depwsc::num

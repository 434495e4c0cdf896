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

#include "depwsc/numcore/mask_matrix.hpp"

#include <algorithm>

#include "depwsc/error.hpp"

namespace depwsc::num {

MaskMatrix::MaskMatrix(std::size_t n, std::vector<std::uint8_t> bits) : n_(n), bits_(std::move(bits)) {
  if (bits_.size() != n_ * n_) {
    throw ShapeError("mask of size " + std::to_string(n_) + " needs " + std::to_string(n_ * n_) +
                     " entries, got " + std::to_string(bits_.size()));
  }
  for (auto b : bits_) {
    if (b > 1) throw ContractError("mask entries must be 0 or 1");
  }
}

MaskMatrix MaskMatrix::ones(std::size_t n) { return MaskMatrix(n, std::vector<std::uint8_t>(n * n, 1)); }

MaskMatrix MaskMatrix::identity(std::size_t n) {
  MaskMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) m.set(i, i);
  return m;
}

MaskMatrix MaskMatrix::from_rows(const std::vector<std::vector<int>>& rows) {
  const std::size_t n = rows.size();
  std::vector<std::uint8_t> bits;
  bits.reserve(n * n);
  for (const auto& r : rows) {
    if (r.size() != n) throw ShapeError("mask rows must have " + std::to_string(n) + " entries");
    for (int v : r) {
      if (v != 0 && v != 1) throw ContractError("mask entries must be 0 or 1");
      bits.push_back(static_cast<std::uint8_t>(v));
    }
  }
  return MaskMatrix(n, std::move(bits));
}

void MaskMatrix::set_row(std::size_t i, bool on) {
  std::fill_n(bits_.begin() + static_cast<std::ptrdiff_t>(i * n_), n_, on ? 1 : 0);
}

void MaskMatrix::set_col(std::size_t j, bool on) {
  for (std::size_t i = 0; i < n_; ++i) set(i, j, on);
}

bool MaskMatrix::row_empty(std::size_t i) const noexcept {
  for (std::size_t j = 0; j < n_; ++j) {
    if (at(i, j)) return false;
  }
  return true;
}

bool MaskMatrix::symmetric() const noexcept {
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) {
      if (at(i, j) != at(j, i)) return false;
    }
  }
  return true;
}

bool MaskMatrix::all_ones() const noexcept {
  return std::all_of(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b == 1; });
}

std::size_t MaskMatrix::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::string MaskMatrix::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      if (j) out += ' ';
      out += at(i, j) ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

MaskMode parse_mask_mode(const std::string& s) {
  if (s == "additive") return MaskMode::additive;
  if (s == "multiplicative") return MaskMode::multiplicative;
  throw ContractError("unknown mask mode '" + s + "' (expected additive|multiplicative)");
}

std::string to_string(MaskMode mode) {
  return mode == MaskMode::additive ? "additive" : "multiplicative";
}

}  // namespace depwsc::num

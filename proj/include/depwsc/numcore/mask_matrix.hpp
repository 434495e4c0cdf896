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
#include <cstdint>
#include <string>
#include <vector>

namespace depwsc::num {

/// Square 0/1 attention mask. Entry (i, j) = 1 means position i may attend
/// to position j.
class MaskMatrix {
 public:
  MaskMatrix() = default;
  explicit MaskMatrix(std::size_t n) : n_(n), bits_(n * n, 0) {}
  MaskMatrix(std::size_t n, std::vector<std::uint8_t> bits);

  static MaskMatrix ones(std::size_t n);
  static MaskMatrix identity(std::size_t n);
  static MaskMatrix from_rows(const std::vector<std::vector<int>>& rows);

  std::size_t size() const noexcept { return n_; }
  bool at(std::size_t i, std::size_t j) const noexcept { return bits_[i * n_ + j] != 0; }
  void set(std::size_t i, std::size_t j, bool on = true) noexcept { bits_[i * n_ + j] = on ? 1 : 0; }
  void set_row(std::size_t i, bool on);
  void set_col(std::size_t j, bool on);

  bool row_empty(std::size_t i) const noexcept;
  bool symmetric() const noexcept;
  bool all_ones() const noexcept;
  std::size_t count() const noexcept;

  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

  /// One line per row of space-separated 0/1.
  std::string to_string() const;

  bool operator==(const MaskMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> bits_;
};

enum class MaskMode {
  additive,        // large negative offset on masked logits before softmax
  multiplicative,  // logits multiplied elementwise by the mask
};

MaskMode parse_mask_mode(const std::string& s);
std::string to_string(MaskMode mode);

/// Offset added to masked logits in additive mode.
inline constexpr double kMaskedLogitOffset = -1e9;

}  // namespace depwsc::num

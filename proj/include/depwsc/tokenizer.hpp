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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace depwsc::tok {

inline constexpr std::string_view kPad = "[PAD]";
inline constexpr std::string_view kUnk = "[UNK]";
inline constexpr std::string_view kCls = "[CLS]";
inline constexpr std::string_view kSep = "[SEP]";
inline constexpr std::string_view kMaskToken = "[MASK]";
inline constexpr std::string_view kContinuation = "##";

using TokenId = std::uint32_t;

/// Immutable piece <-> id table. Ids are line numbers of the vocab file;
/// [PAD] must be id 0 and the other four specials must be present.
class Vocab {
 public:
  static Vocab from_pieces(std::vector<std::string> pieces);
  static Vocab load(const std::filesystem::path& path);

  std::size_t size() const noexcept { return pieces_.size(); }
  std::optional<TokenId> find(std::string_view piece) const;
  /// Id of a piece, or [UNK] when absent.
  TokenId id(std::string_view piece) const;
  const std::string& piece(TokenId id) const { return pieces_.at(id); }
  bool contains(std::string_view piece) const { return find(piece).has_value(); }

  TokenId pad_id() const noexcept { return 0; }
  TokenId unk_id() const noexcept { return unk_; }
  TokenId cls_id() const noexcept { return cls_; }
  TokenId sep_id() const noexcept { return sep_; }
  TokenId mask_id() const noexcept { return mask_; }

  const std::vector<std::string>& pieces() const noexcept { return pieces_; }

 private:
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId unk_ = 0, cls_ = 0, sep_ = 0, mask_ = 0;
};

struct Word {
  std::string text;
  std::size_t begin = 0;  // byte offsets into the source text
  std::size_t end = 0;
  bool operator==(const Word&) const = default;
};

/// Lowercases ASCII, splits on whitespace and emits every ASCII punctuation
/// character as its own word.
std::vector<Word> word_tokenize(std::string_view text);
std::vector<std::string> word_strings(std::string_view text);

/// Greedy longest-match-first segmentation. Non-initial pieces carry "##".
/// A word with any unmatchable position becomes a single [UNK].
std::vector<std::string> wordpiece(std::string_view word, const Vocab& vocab);

/// Alignment value for [CLS]/[SEP] positions.
inline constexpr std::size_t kSpecialPosition = static_cast<std::size_t>(-1);

struct Encoding {
  std::vector<TokenId> token_ids;
  std::vector<std::uint8_t> segment_ids;
  // Source word index per position, words numbered across both segments
  // (A first, then B), or kSpecialPosition.
  std::vector<std::size_t> alignment;
  // Byte spans of the source words inside the space-joined A+B text.
  std::vector<std::pair<std::size_t, std::size_t>> word_offsets;
  std::vector<std::string> pieces;
  std::size_t words_a = 0;
  std::size_t words_b = 0;

  std::size_t size() const noexcept { return token_ids.size(); }
};

/// [CLS] A [SEP] B [SEP]. Segment 0 runs through the first [SEP]. When the
/// layout exceeds max_len, trailing pieces are dropped from the longer
/// segment first (B on ties).
Encoding encode_pair(const std::vector<std::string>& seg_a, const std::vector<std::string>& seg_b,
                     const Vocab& vocab, std::size_t max_len);

std::string to_lower_ascii(std::string_view s);

}  // namespace depwsc::tok

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
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "depwsc/numcore/mask_matrix.hpp"
#include "depwsc/tokenizer.hpp"

namespace depwsc::dep {

using num::MaskMatrix;

/// Head value of the root word.
inline constexpr std::size_t kRoot = static_cast<std::size_t>(-1);

/// One dependency-parsed sentence. Heads are 0-based word indices.
struct DepParse {
  std::string sent_id;  // from a "# sent_id = ..." comment, may be empty
  std::vector<std::string> words;
  std::vector<std::size_t> head;
  std::vector<std::string> deprel;

  std::size_t size() const noexcept { return words.size(); }
  std::size_t root() const;
  /// Throws ParseError (mentioning `sentence_index`) unless the heads form
  /// a single-rooted tree over all words.
  void validate(std::size_t sentence_index = 0) const;
};

/// Reads CoNLL-U. Multiword-token ranges ("3-4") and empty nodes ("5.1")
/// are skipped; HEAD 0 is the root.
std::vector<DepParse> parse_conllu(std::string_view text);
std::vector<DepParse> load_conllu(const std::filesystem::path& path);
std::string to_conllu(const DepParse& parse);

/// Parses keyed by sent_id. Duplicate or missing ids are format errors.
std::map<std::string, DepParse> index_by_sent_id(std::vector<DepParse> parses);

/// D[i][j] = 1 iff j == i, j is the head of i, or i is the head of j.
MaskMatrix build_word_mask(const DepParse& parse);

/// Token-level mask: each subword takes its word's row spread over the
/// subword columns; rows and columns at [CLS]/[SEP] positions are all ones.
MaskMatrix expand_to_subwords(const MaskMatrix& word_mask, const tok::Encoding& encoding);

/// Grid with row/column labels, for inspection output.
std::string render_mask(const MaskMatrix& mask, const std::vector<std::string>& labels);

}  // namespace depwsc::dep

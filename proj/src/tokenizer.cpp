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

#include "depwsc/tokenizer.hpp"

#include <array>
#include <cctype>
#include <fstream>

#include "depwsc/error.hpp"

namespace depwsc::tok {

Vocab Vocab::from_pieces(std::vector<std::string> pieces) {
  Vocab v;
  v.pieces_ = std::move(pieces);
  for (std::size_t i = 0; i < v.pieces_.size(); ++i) {
    const auto [it, inserted] = v.index_.emplace(v.pieces_[i], static_cast<TokenId>(i));
    if (!inserted) {
      throw FormatError("vocab line " + std::to_string(i + 1) + ": duplicate piece '" +
                        v.pieces_[i] + "' (first seen on line " + std::to_string(it->second + 1) +
                        ")");
    }
  }
  for (std::string_view special : std::array{kPad, kUnk, kCls, kSep, kMaskToken}) {
    if (!v.contains(special)) {
      throw FormatError("vocab is missing special token " + std::string(special));
    }
  }
  if (v.pieces_.front() != kPad) {
    throw FormatError("vocab must list " + std::string(kPad) + " on line 1 (id 0)");
  }
  v.unk_ = *v.find(kUnk);
  v.cls_ = *v.find(kCls);
  v.sep_ = *v.find(kSep);
  v.mask_ = *v.find(kMaskToken);
  return v;
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open vocab file " + path.string());
  std::vector<std::string> pieces;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pieces.push_back(line);
  }
  return from_pieces(std::move(pieces));
}

std::optional<TokenId> Vocab::find(std::string_view piece) const {
  const auto it = index_.find(std::string(piece));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocab::id(std::string_view piece) const { return find(piece).value_or(unk_); }

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<Word> word_tokenize(std::string_view text) {
  std::vector<Word> words;
  std::size_t i = 0;
  const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  const auto is_punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
  while (i < text.size()) {
    if (is_space(text[i])) {
      ++i;
    } else if (is_punct(text[i])) {
      words.push_back({to_lower_ascii(text.substr(i, 1)), i, i + 1});
      ++i;
    } else {
      const std::size_t start = i;
      while (i < text.size() && !is_space(text[i]) && !is_punct(text[i])) ++i;
      words.push_back({to_lower_ascii(text.substr(start, i - start)), start, i});
    }
  }
  return words;
}

std::vector<std::string> word_strings(std::string_view text) {
  std::vector<std::string> out;
  for (auto& w : word_tokenize(text)) out.push_back(std::move(w.text));
  return out;
}

std::vector<std::string> wordpiece(std::string_view word, const Vocab& vocab) {
  constexpr std::size_t kMaxWordBytes = 100;
  if (word.empty() || word.size() > kMaxWordBytes) return {std::string(kUnk)};
  std::vector<std::string> pieces;
  std::size_t start = 0;
  while (start < word.size()) {
    std::size_t end = word.size();
    std::optional<std::string> match;
    while (start < end) {
      std::string candidate(word.substr(start, end - start));
      if (start > 0) candidate.insert(0, kContinuation);
      if (vocab.contains(candidate)) {
        match = std::move(candidate);
        break;
      }
      --end;
    }
    if (!match) return {std::string(kUnk)};
    pieces.push_back(std::move(*match));
    start = end;
  }
  return pieces;
}

namespace {

struct Piece {
  std::string text;
  std::size_t word;
};

std::vector<Piece> segment_pieces(const std::vector<std::string>& words, std::size_t first_word,
                                  const Vocab& vocab) {
  std::vector<Piece> out;
  for (std::size_t w = 0; w < words.size(); ++w) {
    for (auto& p : wordpiece(to_lower_ascii(words[w]), vocab)) {
      out.push_back({std::move(p), first_word + w});
    }
  }
  return out;
}

}  // namespace

Encoding encode_pair(const std::vector<std::string>& seg_a, const std::vector<std::string>& seg_b,
                     const Vocab& vocab, std::size_t max_len) {
  if (max_len < 3) {
    throw ContractError("encode_pair: max_len " + std::to_string(max_len) +
                        " leaves no room for [CLS] and two [SEP]");
  }
  if (seg_b.empty()) throw ContractError("encode_pair: second segment is empty");

  auto a = segment_pieces(seg_a, 0, vocab);
  auto b = segment_pieces(seg_b, seg_a.size(), vocab);
  while (a.size() + b.size() + 3 > max_len) {
    if (a.size() > b.size()) {
      a.pop_back();
    } else {
      b.pop_back();
    }
  }

  Encoding enc;
  enc.words_a = seg_a.size();
  enc.words_b = seg_b.size();
  const auto push = [&](std::string_view piece, std::uint8_t segment, std::size_t word) {
    enc.token_ids.push_back(vocab.id(piece));
    enc.segment_ids.push_back(segment);
    enc.alignment.push_back(word);
    enc.pieces.emplace_back(piece);
  };
  push(kCls, 0, kSpecialPosition);
  for (const auto& p : a) push(p.text, 0, p.word);
  push(kSep, 0, kSpecialPosition);
  for (const auto& p : b) push(p.text, 1, p.word);
  push(kSep, 1, kSpecialPosition);

  std::size_t offset = 0;
  for (const auto* seg : {&seg_a, &seg_b}) {
    for (const auto& w : *seg) {
      enc.word_offsets.emplace_back(offset, offset + w.size());
      offset += w.size() + 1;
    }
  }
  return enc;
}

}  // namespace depwsc::tok

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

#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "depwsc/error.hpp"
#include "depwsc/numcore/rng.hpp"
#include "depwsc/tokenizer.hpp"
#include "synth.hpp"

using namespace depwsc;
using namespace depwsc::tok;

namespace {

Vocab fixture_vocab() { return Vocab::load(testing::fixture_path("vocab.txt")); }

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << text;
  return path;
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("fixture vocab loads with [PAD] at id 0") {
  const auto v = fixture_vocab();
  CHECK(v.size() > 150);
  CHECK(v.pad_id() == 0);
  CHECK(v.piece(v.cls_id()) == "[CLS]");
  CHECK(v.id("no-such-piece") == v.unk_id());
}

TEST_CASE("vocab loading rejects duplicates and missing specials") {
  const auto dup = write_temp("depwsc_dup_vocab.txt", "[PAD]\n[UNK]\n[CLS]\n[SEP]\n[MASK]\ncat\ndog\ncat\n");
  const auto msg = message_of([&] { Vocab::load(dup); });
  CHECK(msg.find("line 8") != std::string::npos);
  CHECK(msg.find("cat") != std::string::npos);
  const auto missing = write_temp("depwsc_missing_vocab.txt", "[PAD]\n[UNK]\n[CLS]\n[MASK]\n");
  CHECK(message_of([&] { Vocab::load(missing); }).find("[SEP]") != std::string::npos);
  const auto order = write_temp("depwsc_order_vocab.txt", "[UNK]\n[PAD]\n[CLS]\n[SEP]\n[MASK]\n");
  CHECK_THROWS_AS(Vocab::load(order), FormatError);
}

TEST_CASE("wordpiece takes the longest prefix first") {
  const auto v = fixture_vocab();
  CHECK(wordpiece("trophy", v) == std::vector<std::string>{"trophy"});
  CHECK(wordpiece("suitcase", v) == std::vector<std::string>{"suit", "##case"});
  CHECK(wordpiece("doesn't", v) == std::vector<std::string>{"doesn", "##'", "##t"});
  CHECK(wordpiece("qqq", v) == std::vector<std::string>{"[UNK]"});
  CHECK(wordpiece("", v) == std::vector<std::string>{"[UNK]"});
}

TEST_CASE("wordpiece on a word with an unmatchable tail gives a single [UNK]") {
  const auto v = Vocab::from_pieces({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "ab", "##c"});
  CHECK(wordpiece("abc", v) == std::vector<std::string>{"ab", "##c"});
  CHECK(wordpiece("abd", v) == std::vector<std::string>{"[UNK]"});
}

TEST_CASE("wordpiece pieces concatenate back to the word") {
  const auto v = testing::synth_vocab();
  num::Rng rng(17);
  const std::vector<std::string> stems = {"ele", "suit", "peb", "the", "coin", "ant"};
  const std::vector<std::string> tails = {"", "phant", "case", "ble"};
  for (int i = 0; i < 200; ++i) {
    const std::string word = stems[rng.below(stems.size())] + tails[rng.below(tails.size())];
    const auto pieces = wordpiece(word, v);
    if (pieces == std::vector<std::string>{"[UNK]"}) continue;
    std::string joined;
    for (const auto& p : pieces) joined += p.starts_with("##") ? p.substr(2) : p;
    CHECK(joined == word);
  }
}

TEST_CASE("word tokenizer lowercases and splits punctuation") {
  const auto words = word_tokenize("The Trophy, doesn't  fit.");
  std::vector<std::string> text;
  for (const auto& w : words) text.push_back(w.text);
  CHECK(text == std::vector<std::string>{"the", "trophy", ",", "doesn", "'", "t", "fit", "."});
  CHECK(words[1].begin == 4);
  CHECK(words[1].end == 10);
}

TEST_CASE("pair encoding lays out [CLS] A [SEP] B [SEP]") {
  const auto v = fixture_vocab();
  const auto e = encode_pair({"the", "suitcase"}, {"is", "large"}, v, 64);
  CHECK(e.pieces == std::vector<std::string>{"[CLS]", "the", "suit", "##case", "[SEP]", "is", "large", "[SEP]"});
  CHECK(e.segment_ids == std::vector<std::uint8_t>{0, 0, 0, 0, 0, 1, 1, 1});
  CHECK(e.alignment == std::vector<std::size_t>{kSpecialPosition, 0, 1, 1, kSpecialPosition, 2, 3,
                                                kSpecialPosition});
  CHECK(e.token_ids[0] == v.cls_id());
  CHECK(e.words_a == 2);
  CHECK(e.words_b == 2);
}

TEST_CASE("pair encoding with an empty first segment") {
  const auto v = fixture_vocab();
  const auto e = encode_pair({}, {"it", "is"}, v, 64);
  CHECK(e.pieces == std::vector<std::string>{"[CLS]", "[SEP]", "it", "is", "[SEP]"});
}

TEST_CASE("truncation drops from the longer segment, from B on ties") {
  const auto v = fixture_vocab();
  const auto longer_a = encode_pair({"the", "cat", "sat", "on"}, {"a", "desk"}, v, 8);
  CHECK(longer_a.pieces == std::vector<std::string>{"[CLS]", "the", "cat", "sat", "[SEP]", "a", "desk", "[SEP]"});
  const auto tie = encode_pair({"the", "cat"}, {"a", "desk"}, v, 6);
  CHECK(tie.pieces == std::vector<std::string>{"[CLS]", "the", "cat", "[SEP]", "a", "[SEP]"});
  CHECK(encode_pair({"the", "cat", "sat"}, {"a"}, v, 5).size() == 5);
}

TEST_CASE("pair encoding preconditions") {
  const auto v = fixture_vocab();
  CHECK_THROWS_AS(encode_pair({"a"}, {"b"}, v, 2), ContractError);
  CHECK_THROWS_AS(encode_pair({"a"}, {}, v, 16), ContractError);
}

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
#include "depwsc/schema.hpp"
#include "synth.hpp"

using namespace depwsc;
using namespace depwsc::schema;

namespace {

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

Schema trophy() { return load_schemas(testing::fixture_path("trophy.jsonl")).at(0); }

ModelBundle toy_bundle(std::uint64_t seed, enc::MaskPlan plan = enc::MaskPlan::none()) {
  ModelBundle b{.config = {}, .plan = plan, .params = {}, .vocab = testing::synth_vocab(), .max_seq_len = 32};
  b.config.num_layers = 2;
  b.config.num_heads = 2;
  b.config.hidden_size = 8;
  b.config.ff_size = 16;
  b.config.vocab_size = b.vocab.size();
  b.config.max_positions = 32;
  b.params = enc::init_params(b.config, plan.kind, seed);
  return b;
}

}  // namespace

TEST_CASE("the trophy fixture loads and validates") {
  const auto s = trophy();
  CHECK(s.id == "wsc-trophy");
  CHECK(s.words.size() == 14);
  CHECK(s.words[s.pronoun_begin] == "it");
  CHECK(s.candidates[0] == "the trophy");
  CHECK(s.answer_index == 0);
  CHECK_FALSE(s.switch_group.has_value());
  CHECK(Schema::from_json(s.to_json()).to_json() == s.to_json());
}

TEST_CASE("trophy candidates substitute at the pronoun span") {
  const auto pair = generate_candidates(trophy());
  CHECK_FALSE(pair.segment_a_empty);
  const auto& c0 = pair.members[0];
  const auto& c1 = pair.members[1];
  CHECK(c0.seg_a.size() == 9);
  CHECK(c0.seg_b == std::vector<std::string>{"the", "trophy", "is", "too", "large", "."});
  CHECK(c1.seg_b == std::vector<std::string>{"the", "brown", "suitcase", "is", "too", "large", "."});
  CHECK(c0.seg_a == c1.seg_a);
  CHECK(c0.words().size() == 15);
  CHECK(c1.words().size() == 16);
}

TEST_CASE("trophy candidates align with their sidecar parses") {
  const auto s = trophy();
  const auto parses = load_parse_index(testing::fixture_path("trophy.conllu"));
  const auto vocab = tok::Vocab::load(testing::fixture_path("vocab.txt"));
  const auto pair = generate_candidates(s);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto prepared = prepare_candidate(pair.members[k], s.id, &parses.at(parse_key(s.id, k)), vocab, 64);
    REQUIRE(prepared.mask.has_value());
    CHECK(prepared.mask->size() == prepared.encoding.size());
  }
  // Parse of the other candidate has the wrong word count.
  const auto msg = message_of(
      [&] { prepare_candidate(pair.members[0], s.id, &parses.at(parse_key(s.id, 1)), vocab, 64); });
  CHECK(msg.find("wsc-trophy") != std::string::npos);
  CHECK_THROWS_AS(prepare_candidate(pair.members[0], s.id, &parses.at(parse_key(s.id, 1)), vocab, 64),
                  AlignmentError);
}

TEST_CASE("corpus parsing errors") {
  CHECK(parse_schemas("").empty());
  CHECK(parse_schemas("\n\n").empty());
  const auto line = to_jsonl({trophy()});
  CHECK(message_of([&] { parse_schemas(line + line); }).find("wsc-trophy") != std::string::npos);
  CHECK_THROWS_AS(parse_schemas(line + line), FormatError);
  const auto bad = message_of([&] { parse_schemas(line + "{not json\n"); });
  CHECK(bad.find("line 2") != std::string::npos);
  CHECK_THROWS_AS(load_schemas("/nonexistent/corpus.jsonl"), Error);
}

TEST_CASE("schema invariants are enforced with the id in the message") {
  auto s = trophy();
  s.pronoun_begin = 12;
  s.pronoun_end = 20;
  CHECK(message_of([&] { s.validate(); }).find("wsc-trophy") != std::string::npos);
  s = trophy();
  s.answer_index = 2;
  CHECK_THROWS_AS(s.validate(), FormatError);
  s = trophy();
  s.candidates[1] = s.candidates[0];
  CHECK_THROWS_AS(s.validate(), FormatError);
  s = trophy();
  s.pronoun_end = s.pronoun_begin;
  CHECK_THROWS_AS(s.validate(), FormatError);
  s = trophy();
  s.candidates[0] = "  ";
  CHECK_THROWS_AS(s.validate(), FormatError);
}

TEST_CASE("a pronoun at position zero gives an empty first segment") {
  auto s = trophy();
  s.words = {"It", "was", "too", "large", "."};
  s.pronoun_begin = 0;
  s.pronoun_end = 1;
  s.validate();
  const auto pair = generate_candidates(s);
  CHECK(pair.segment_a_empty);
  CHECK(pair.members[0].seg_a.empty());
  const auto e = tok::encode_pair(pair.members[0].seg_a, pair.members[0].seg_b,
                                  tok::Vocab::load(testing::fixture_path("vocab.txt")), 64);
  CHECK(e.pieces[1] == "[SEP]");
}

TEST_CASE("substituting the pronoun itself reproduces the sentence") {
  const auto corpus = testing::make_corpus({.count = 20, .seed = 4, .style = testing::SynthStyle::distractor});
  for (const auto& s : corpus.schemas) {
    std::string pronoun;
    for (std::size_t i = s.pronoun_begin; i < s.pronoun_end; ++i) pronoun += (pronoun.empty() ? "" : " ") + s.words[i];
    auto lowered = s.words;
    for (auto& w : lowered) w = tok::word_strings(w).at(0);
    CHECK(substitute(s, pronoun, 0).words() == lowered);
  }
}

TEST_CASE("overlap check is exact on words and ignores case") {
  auto a = trophy();
  auto b = trophy();
  b.id = "other";
  for (auto& w : b.words) w = tok::to_lower_ascii(w);
  const auto hits = find_overlaps({a}, {b});
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].id_a == "wsc-trophy");
  CHECK(hits[0].id_b == "other");
  b.words.back() = "!";
  CHECK(find_overlaps({a}, {b}).empty());
}

TEST_CASE("decide picks the larger score and sends exact ties to candidate 0") {
  const auto p = decide("x", {0.3, 0.7}, 1);
  CHECK(p.predicted_index == 1);
  CHECK(p.correct);
  CHECK_FALSE(p.tie);
  const auto t = decide("x", {0.5, 0.5}, 1);
  CHECK(t.tie);
  CHECK(t.predicted_index == 0);
  CHECK_FALSE(t.correct);
}

TEST_CASE("a zero classifier scores every candidate one half and ties") {
  const auto corpus = testing::make_corpus({.count = 6, .seed = 2});
  auto model = toy_bundle(3);
  model.params.nsp_w.mutable_value() = num::Tensor<float>(model.params.nsp_w.dims());
  model.params.nsp_b.mutable_value() = num::Tensor<float>(model.params.nsp_b.dims());
  for (const auto& s : corpus.schemas) {
    const auto p = resolve(model, s, corpus.parses);
    CHECK(p.scores[0] == 0.5);
    CHECK(p.scores[1] == 0.5);
    CHECK(p.tie);
    CHECK(p.predicted_index == 0);
  }
}

TEST_CASE("swapping the candidates swaps the scores") {
  const auto corpus = testing::make_corpus({.count = 10, .seed = 6, .style = testing::SynthStyle::distractor});
  for (const auto& plan : {enc::MaskPlan::none(), enc::MaskPlan::inside({0})}) {
    const auto model = toy_bundle(8, plan);
    for (const auto& s : corpus.schemas) {
      auto swapped = s;
      std::swap(swapped.candidates[0], swapped.candidates[1]);
      swapped.answer_index = 1 - s.answer_index;
      ParseIndex parses;
      parses[parse_key(s.id, 0)] = corpus.parses.at(parse_key(s.id, 1));
      parses[parse_key(s.id, 1)] = corpus.parses.at(parse_key(s.id, 0));
      const auto p = resolve(model, s, corpus.parses);
      const auto q = resolve(model, swapped, parses);
      CHECK(p.scores[0] == q.scores[1]);
      CHECK(p.scores[1] == q.scores[0]);
      if (!p.tie) CHECK(p.correct == q.correct);
    }
  }
}

TEST_CASE("resolve needs parses only when the plan masks") {
  const auto corpus = testing::make_corpus({.count = 2, .seed = 1});
  const auto& s = corpus.schemas[0];
  CHECK_NOTHROW(resolve(toy_bundle(1), s, {}));
  const auto msg = message_of([&] { resolve(toy_bundle(1, enc::MaskPlan::inside({1})), s, {}); });
  CHECK(msg.find(s.id) != std::string::npos);
  CHECK_THROWS_AS(resolve(toy_bundle(1, enc::MaskPlan::inside({1})), s, {}), AlignmentError);
}

TEST_CASE("scores are probabilities") {
  const auto corpus = testing::make_corpus({.count = 8, .seed = 9});
  const auto model = toy_bundle(4, enc::MaskPlan::outside(2));
  for (const auto& s : corpus.schemas) {
    const auto p = resolve(model, s, corpus.parses);
    for (double v : p.scores) CHECK((v > 0.0 && v < 1.0));
  }
}

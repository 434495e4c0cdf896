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

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "depwsc/depmask.hpp"
#include "depwsc/encoder.hpp"
#include "depwsc/tokenizer.hpp"

namespace depwsc::schema {

/// One Winograd problem. The pronoun is located by word span, never by
/// string match.
struct Schema {
  std::string id;
  std::vector<std::string> words;
  std::size_t pronoun_begin = 0;
  std::size_t pronoun_end = 0;  // exclusive
  std::array<std::string, 2> candidates;
  std::size_t answer_index = 0;
  bool associative = false;
  bool switchable = false;
  std::optional<std::string> switch_group;
  bool switched = false;

  /// Throws FormatError naming the schema id on any invariant violation.
  void validate() const;

  nlohmann::json to_json() const;
  static Schema from_json(const nlohmann::json& j);
};

/// JSON-lines corpus; blank lines are ignored. Errors carry the line number
/// (malformed JSON) or the schema id (invariant violations, duplicate ids).
std::vector<Schema> parse_schemas(std::string_view text);
std::vector<Schema> load_schemas(const std::filesystem::path& path);
std::string to_jsonl(const std::vector<Schema>& schemas);

struct Overlap {
  std::string id_a;
  std::string id_b;
};

/// Schemas of `a` and `b` whose word sequences match exactly (case-insensitive).
std::vector<Overlap> find_overlaps(const std::vector<Schema>& a, const std::vector<Schema>& b);

/// Sentence with the pronoun replaced, split at the substitution point.
struct CandidateSentence {
  std::vector<std::string> seg_a;  // words before the pronoun
  std::vector<std::string> seg_b;  // candidate words, then the rest
  std::size_t candidate_index = 0;

  std::vector<std::string> words() const;
};

struct CandidatePair {
  std::array<CandidateSentence, 2> members;
  bool segment_a_empty = false;  // pronoun opens the sentence
};

CandidatePair generate_candidates(const Schema& schema);

/// Replaces the pronoun span with arbitrary text. generate_candidates is
/// this applied to each candidate.
CandidateSentence substitute(const Schema& schema, std::string_view replacement,
                             std::size_t candidate_index);

/// Sidecar key: "<schema_id>/<candidate_index>".
std::string parse_key(const std::string& schema_id, std::size_t candidate_index);

using ParseIndex = std::map<std::string, dep::DepParse>;
ParseIndex load_parse_index(const std::filesystem::path& path);

struct Prediction {
  std::string schema_id;
  std::array<double, 2> scores{};
  std::size_t predicted_index = 0;
  bool tie = false;
  bool correct = false;
};

/// Everything needed to score a candidate sentence.
struct ModelBundle {
  enc::EncoderConfig config;
  enc::MaskPlan plan;
  enc::ModelParams<float> params;
  tok::Vocab vocab;
  std::size_t max_seq_len = 64;
};

struct PreparedCandidate {
  tok::Encoding encoding;
  std::optional<num::MaskMatrix> mask;
};

/// Encodes one candidate sentence and, when a parse is given, builds its
/// token-level dependency mask. The parse must have one word per word of
/// the candidate sentence (AlignmentError naming the schema otherwise).
PreparedCandidate prepare_candidate(const CandidateSentence& sentence, const std::string& schema_id,
                                    const dep::DepParse* parse, const tok::Vocab& vocab,
                                    std::size_t max_len);

/// Eval-mode IsNext probability of a prepared candidate.
double score_candidate(const ModelBundle& model, const PreparedCandidate& candidate);

/// Scores both candidate sentences and picks the more probable one; exact
/// ties (within 1e-9) go to candidate 0 with tie set.
Prediction resolve(const ModelBundle& model, const Schema& schema, const ParseIndex& parses);

/// Prediction from two scores, using the tie rule of resolve.
Prediction decide(const std::string& schema_id, std::array<double, 2> scores, std::size_t answer_index);

}  // namespace depwsc::schema

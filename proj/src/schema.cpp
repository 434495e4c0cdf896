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

#include "depwsc/schema.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "depwsc/error.hpp"

namespace depwsc::schema {

using nlohmann::json;

void Schema::validate() const {
  const auto fail = [&](const std::string& what) {
    throw FormatError("schema '" + id + "': " + what);
  };
  if (id.empty()) throw FormatError("schema with empty id");
  if (words.empty()) fail("no words");
  if (pronoun_begin >= pronoun_end || pronoun_end > words.size()) {
    fail("pronoun_span [" + std::to_string(pronoun_begin) + ", " + std::to_string(pronoun_end) +
         ") outside the " + std::to_string(words.size()) + "-word sentence");
  }
  for (const auto& c : candidates) {
    if (tok::word_strings(c).empty()) fail("empty candidate");
  }
  if (tok::to_lower_ascii(candidates[0]) == tok::to_lower_ascii(candidates[1])) {
    fail("candidates are identical");
  }
  if (answer_index > 1) fail("answer_index must be 0 or 1");
  if (switchable != switch_group.has_value()) {
    fail(switchable ? "switchable but no switch_group" : "switch_group set on a non-switchable schema");
  }
}

json Schema::to_json() const {
  json j;
  j["id"] = id;
  j["words"] = words;
  j["pronoun_span"] = {pronoun_begin, pronoun_end};
  j["candidates"] = {candidates[0], candidates[1]};
  j["answer_index"] = answer_index;
  j["associative"] = associative;
  j["switchable"] = switchable;
  j["switch_group"] = switch_group ? json(*switch_group) : json(nullptr);
  j["switched"] = switched;
  return j;
}

Schema Schema::from_json(const json& j) {
  Schema s;
  s.id = j.at("id").get<std::string>();
  s.words = j.at("words").get<std::vector<std::string>>();
  const auto span = j.at("pronoun_span").get<std::vector<std::size_t>>();
  if (span.size() != 2) throw FormatError("schema '" + s.id + "': pronoun_span needs two indices");
  s.pronoun_begin = span[0];
  s.pronoun_end = span[1];
  const auto cands = j.at("candidates").get<std::vector<std::string>>();
  if (cands.size() != 2) {
    throw FormatError("schema '" + s.id + "': expected 2 candidates, got " + std::to_string(cands.size()));
  }
  s.candidates = {cands[0], cands[1]};
  s.answer_index = j.at("answer_index").get<std::size_t>();
  s.associative = j.value("associative", false);
  s.switchable = j.value("switchable", false);
  if (j.contains("switch_group") && !j.at("switch_group").is_null()) {
    s.switch_group = j.at("switch_group").get<std::string>();
  }
  s.switched = j.value("switched", false);
  return s;
}

std::vector<Schema> parse_schemas(std::string_view text) {
  std::vector<Schema> out;
  std::set<std::string> ids;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Schema s;
    try {
      s = Schema::from_json(json::parse(line));
    } catch (const json::exception& e) {
      throw FormatError("schema corpus line " + std::to_string(line_no) + ": " + e.what());
    }
    s.validate();
    if (!ids.insert(s.id).second) throw FormatError("duplicate schema id '" + s.id + "'");
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Schema> load_schemas(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open schema corpus " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_schemas(buf.str());
}

std::string to_jsonl(const std::vector<Schema>& schemas) {
  std::string out;
  for (const auto& s : schemas) out += s.to_json().dump() + "\n";
  return out;
}

std::vector<Overlap> find_overlaps(const std::vector<Schema>& a, const std::vector<Schema>& b) {
  const auto key = [](const Schema& s) {
    std::string k;
    for (const auto& w : s.words) k += tok::to_lower_ascii(w) + '\x1f';
    return k;
  };
  std::multimap<std::string, const Schema*> index;
  for (const auto& s : b) index.emplace(key(s), &s);
  std::vector<Overlap> out;
  for (const auto& s : a) {
    const auto [lo, hi] = index.equal_range(key(s));
    for (auto it = lo; it != hi; ++it) out.push_back({s.id, it->second->id});
  }
  return out;
}

std::vector<std::string> CandidateSentence::words() const {
  std::vector<std::string> out = seg_a;
  out.insert(out.end(), seg_b.begin(), seg_b.end());
  return out;
}

CandidateSentence substitute(const Schema& schema, std::string_view replacement,
                             std::size_t candidate_index) {
  CandidateSentence c;
  c.candidate_index = candidate_index;
  c.seg_a.assign(schema.words.begin(), schema.words.begin() + static_cast<std::ptrdiff_t>(schema.pronoun_begin));
  c.seg_b = tok::word_strings(replacement);
  c.seg_b.insert(c.seg_b.end(), schema.words.begin() + static_cast<std::ptrdiff_t>(schema.pronoun_end),
                 schema.words.end());
  return c;
}

CandidatePair generate_candidates(const Schema& schema) {
  CandidatePair pair;
  for (std::size_t k = 0; k < 2; ++k) pair.members[k] = substitute(schema, schema.candidates[k], k);
  pair.segment_a_empty = schema.pronoun_begin == 0;
  return pair;
}

std::string parse_key(const std::string& schema_id, std::size_t candidate_index) {
  return schema_id + "/" + std::to_string(candidate_index);
}

ParseIndex load_parse_index(const std::filesystem::path& path) {
  return dep::index_by_sent_id(dep::load_conllu(path));
}

PreparedCandidate prepare_candidate(const CandidateSentence& sentence, const std::string& schema_id,
                                    const dep::DepParse* parse, const tok::Vocab& vocab,
                                    std::size_t max_len) {
  PreparedCandidate out;
  out.encoding = tok::encode_pair(sentence.seg_a, sentence.seg_b, vocab, max_len);
  if (parse) {
    const std::size_t expected = sentence.seg_a.size() + sentence.seg_b.size();
    if (parse->size() != expected) {
      throw AlignmentError("schema '" + schema_id + "' candidate " +
                           std::to_string(sentence.candidate_index) + ": parse has " +
                           std::to_string(parse->size()) + " words, candidate sentence has " +
                           std::to_string(expected));
    }
    out.mask = dep::expand_to_subwords(dep::build_word_mask(*parse), out.encoding);
  }
  return out;
}

double score_candidate(const ModelBundle& model, const PreparedCandidate& candidate) {
  const num::MaskMatrix* mask = candidate.mask ? &*candidate.mask : nullptr;
  if (model.plan.uses_mask() && !mask) {
    throw ContractError("plan " + model.plan.describe() + " needs a dependency mask");
  }
  const auto out = enc::encoder_forward(candidate.encoding, model.plan.uses_mask() ? mask : nullptr,
                                        model.params, model.config, model.plan);
  return static_cast<double>(enc::nsp_probability(out.pooled, model.params));
}

Prediction decide(const std::string& schema_id, std::array<double, 2> scores, std::size_t answer_index) {
  Prediction p;
  p.schema_id = schema_id;
  p.scores = scores;
  p.tie = std::abs(scores[0] - scores[1]) <= 1e-9;
  p.predicted_index = (!p.tie && scores[1] > scores[0]) ? 1 : 0;
  p.correct = p.predicted_index == answer_index;
  return p;
}

Prediction resolve(const ModelBundle& model, const Schema& schema, const ParseIndex& parses) {
  const CandidatePair pair = generate_candidates(schema);
  std::array<double, 2> scores{};
  for (std::size_t k = 0; k < 2; ++k) {
    const auto it = parses.find(parse_key(schema.id, k));
    if (it == parses.end() && model.plan.uses_mask()) {
      throw AlignmentError("schema '" + schema.id + "': no parse for candidate " + std::to_string(k) +
                           " (expected sent_id " + parse_key(schema.id, k) + ")");
    }
    const dep::DepParse* parse = it == parses.end() ? nullptr : &it->second;
    scores[k] = score_candidate(model, prepare_candidate(pair.members[k], schema.id, parse,
                                                         model.vocab, model.max_seq_len));
  }
  return decide(schema.id, scores, schema.answer_index);
}

}  // namespace depwsc::schema

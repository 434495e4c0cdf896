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

#include "depwsc/depmask.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "depwsc/error.hpp"

namespace depwsc::dep {

std::size_t DepParse::root() const {
  for (std::size_t i = 0; i < head.size(); ++i) {
    if (head[i] == kRoot) return i;
  }
  throw ParseError("sentence '" + sent_id + "' has no root");
}

void DepParse::validate(std::size_t sentence_index) const {
  const auto fail = [&](const std::string& what) {
    throw ParseError("sentence " + std::to_string(sentence_index) +
                     (sent_id.empty() ? "" : " (" + sent_id + ")") + ": " + what);
  };
  const std::size_t n = words.size();
  if (n == 0) fail("no words");
  if (head.size() != n || deprel.size() != n) fail("head/deprel count differs from word count");
  std::size_t roots = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (head[i] == kRoot) {
      ++roots;
    } else if (head[i] >= n) {
      fail("word " + std::to_string(i + 1) + " has head " + std::to_string(head[i] + 1) +
           " out of range");
    } else if (head[i] == i) {
      fail("word " + std::to_string(i + 1) + " is its own head");
    }
  }
  if (roots != 1) fail("expected exactly one root, found " + std::to_string(roots));
  // Every word must reach the root in fewer than n hops, otherwise a cycle.
  std::vector<int> state(n, 0);  // 0 unknown, 1 on current path, 2 reaches root
  for (std::size_t start = 0; start < n; ++start) {
    std::vector<std::size_t> path;
    std::size_t cur = start;
    while (cur != kRoot && state[cur] == 0) {
      state[cur] = 1;
      path.push_back(cur);
      cur = head[cur];
    }
    if (cur != kRoot && state[cur] == 1) {
      fail("head links form a cycle through word " + std::to_string(cur + 1));
    }
    for (std::size_t p : path) state[p] = 2;
  }
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    cols.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return cols;
}

bool parse_index(const std::string& s, std::size_t& out) {
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

std::vector<DepParse> parse_conllu(std::string_view text) {
  std::vector<DepParse> out;
  DepParse current;
  std::vector<std::size_t> raw_heads;  // 1-based, 0 = root
  std::size_t line_no = 0;

  const auto flush = [&] {
    if (current.words.empty()) {
      current = DepParse{};
      return;
    }
    current.head.clear();
    for (std::size_t h : raw_heads) current.head.push_back(h == 0 ? kRoot : h - 1);
    current.validate(out.size());
    out.push_back(std::move(current));
    current = DepParse{};
    raw_heads.clear();
  };

  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line.front() == '#') {
      constexpr std::string_view key = "sent_id";
      auto body = std::string_view(line).substr(1);
      body.remove_prefix(std::min(body.find_first_not_of(' '), body.size()));
      if (body.starts_with(key)) {
        body.remove_prefix(key.size());
        body.remove_prefix(std::min(body.find_first_not_of(' '), body.size()));
        if (body.starts_with('=')) {
          body.remove_prefix(1);
          body.remove_prefix(std::min(body.find_first_not_of(' '), body.size()));
          while (!body.empty() && body.back() == ' ') body.remove_suffix(1);
          current.sent_id = std::string(body);
        }
      }
      continue;
    }
    const auto cols = split_tabs(line);
    if (cols.size() != 10) {
      throw FormatError("CoNLL-U line " + std::to_string(line_no) + ": expected 10 columns, got " +
                        std::to_string(cols.size()));
    }
    const std::string& id = cols[0];
    if (id.find('-') != std::string::npos || id.find('.') != std::string::npos) continue;
    std::size_t index = 0;
    if (!parse_index(id, index) || index != current.words.size() + 1) {
      throw FormatError("CoNLL-U line " + std::to_string(line_no) + ": unexpected word id '" + id +
                        "'");
    }
    std::size_t h = 0;
    if (!parse_index(cols[6], h)) {
      throw FormatError("CoNLL-U line " + std::to_string(line_no) + ": bad HEAD '" + cols[6] + "'");
    }
    current.words.push_back(cols[1]);
    raw_heads.push_back(h);
    current.deprel.push_back(cols[7]);
  }
  flush();
  return out;
}

std::vector<DepParse> load_conllu(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open CoNLL-U file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_conllu(buf.str());
}

std::string to_conllu(const DepParse& parse) {
  std::string out;
  if (!parse.sent_id.empty()) out += "# sent_id = " + parse.sent_id + "\n";
  for (std::size_t i = 0; i < parse.size(); ++i) {
    const std::size_t h = parse.head[i] == kRoot ? 0 : parse.head[i] + 1;
    const std::string rel = parse.deprel.size() > i && !parse.deprel[i].empty() ? parse.deprel[i] : "dep";
    out += std::to_string(i + 1) + "\t" + parse.words[i] + "\t_\t_\t_\t_\t" + std::to_string(h) +
           "\t" + rel + "\t_\t_\n";
  }
  return out + "\n";
}

std::map<std::string, DepParse> index_by_sent_id(std::vector<DepParse> parses) {
  std::map<std::string, DepParse> out;
  for (std::size_t i = 0; i < parses.size(); ++i) {
    if (parses[i].sent_id.empty()) {
      throw FormatError("parse sidecar sentence " + std::to_string(i) + " has no sent_id comment");
    }
    std::string key = parses[i].sent_id;
    if (!out.emplace(key, std::move(parses[i])).second) {
      throw FormatError("parse sidecar has duplicate sent_id '" + key + "'");
    }
  }
  return out;
}

MaskMatrix build_word_mask(const DepParse& parse) {
  const std::size_t n = parse.size();
  MaskMatrix d(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.set(i, i);
    const std::size_t h = parse.head[i];
    if (h != kRoot) {
      d.set(i, h);
      d.set(h, i);
    }
  }
  return d;
}

MaskMatrix expand_to_subwords(const MaskMatrix& word_mask, const tok::Encoding& encoding) {
  const std::size_t n = encoding.size();
  const auto& align = encoding.alignment;
  for (std::size_t p = 0; p < n; ++p) {
    if (align[p] != tok::kSpecialPosition && align[p] >= word_mask.size()) {
      throw ContractError("expand_to_subwords: position " + std::to_string(p) + " aligns to word " +
                          std::to_string(align[p]) + " but the word mask covers " +
                          std::to_string(word_mask.size()) + " words");
    }
  }
  MaskMatrix out(n);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q) {
      const bool special = align[p] == tok::kSpecialPosition || align[q] == tok::kSpecialPosition;
      out.set(p, q, special || word_mask.at(align[p], align[q]));
    }
  }
  return out;
}

std::string render_mask(const MaskMatrix& mask, const std::vector<std::string>& labels) {
  std::size_t width = 1;
  for (const auto& l : labels) width = std::max(width, l.size());
  std::string out(width + 1, ' ');
  for (std::size_t j = 0; j < mask.size(); ++j) out += std::to_string(j % 10) + (j + 1 < mask.size() ? " " : "");
  out += '\n';
  for (std::size_t i = 0; i < mask.size(); ++i) {
    std::string label = i < labels.size() ? labels[i] : std::to_string(i);
    label.resize(width, ' ');
    out += label + ' ';
    for (std::size_t j = 0; j < mask.size(); ++j) {
      out += mask.at(i, j) ? '1' : '0';
      if (j + 1 < mask.size()) out += ' ';
    }
    out += '\n';
  }
  return out;
}

}  // namespace depwsc::dep

// Copyright 2026 The Sticker Recommendation Authors.
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

#include "sr/corpus/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sr/common/error.hpp"

namespace sr::corpus {
namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

bool Message::sticker_only() const {
  return !tokens.empty() && std::all_of(tokens.begin(), tokens.end(), [](const Token& t) {
    return t.kind == TokenKind::kSticker;
  });
}

Message make_message(std::string_view raw, uint64_t conversation_id, uint32_t position) {
  Message m;
  m.raw = std::string(raw);
  m.tokens = tokenize(normalize_repeats(raw));
  m.conversation_id = conversation_id;
  m.position = position;
  return m;
}

std::vector<MessagePair> extract_pairs(const std::vector<Conversation>& conversations,
                                       int max_words) {
  const auto usable = [max_words](const Message& m) {
    return !m.tokens.empty() && !m.sticker_only() && m.words() <= max_words;
  };
  std::vector<MessagePair> pairs;
  for (const auto& conv : conversations) {
    for (size_t i = 0; i + 1 < conv.size(); ++i) {
      if (usable(conv[i]) && usable(conv[i + 1])) pairs.push_back({conv[i], conv[i + 1]});
    }
  }
  return pairs;
}

Vocab::Vocab(std::vector<VocabEntry> ranked_words) : words_(std::move(ranked_words)) {
  std::set<unsigned char> chars;
  for (size_t i = 0; i < words_.size(); ++i) {
    word_index_.emplace(words_[i].word, static_cast<int>(i) + 2);
    for (unsigned char c : words_[i].word) chars.insert(c);
  }
  chars_.assign(chars.begin(), chars.end());
  for (size_t i = 0; i < chars_.size(); ++i) char_index_[chars_[i]] = static_cast<int>(i) + 2;
}

int Vocab::word_id(std::string_view word) const {
  const auto it = word_index_.find(std::string(word));
  return it == word_index_.end() ? kUnk : it->second;
}

int Vocab::char_id(unsigned char c) const { return char_index_[c]; }

Vocab build_vocab(const std::vector<MessagePair>& pairs, size_t max_words) {
  if (max_words < 1) throw ConfigError("max_words must be >= 1");
  if (pairs.empty()) throw Error("empty corpus");
  std::map<std::string, uint64_t> counts;
  for (const auto& p : pairs) {
    for (const auto* m : {&p.current, &p.next}) {
      for (const auto& t : m->tokens) ++counts[t.text];
    }
  }
  std::vector<VocabEntry> ranked;
  ranked.reserve(counts.size());
  for (auto& [w, c] : counts) ranked.push_back({w, c});
  // std::map iteration is lexicographic, so a stable sort keeps that order on ties.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const VocabEntry& a, const VocabEntry& b) { return a.count > b.count; });
  if (ranked.size() > max_words) ranked.resize(max_words);
  return Vocab(std::move(ranked));
}

std::vector<Conversation> read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file: " + path);
  std::vector<Conversation> convs;
  std::string line;
  uint64_t id = 0;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) {
      ++id;
      continue;
    }
    Conversation conv;
    uint32_t pos = 0;
    for (const auto& raw : split(line, '\t')) conv.push_back(make_message(raw, id, pos++));
    convs.push_back(std::move(conv));
    ++id;
  }
  return convs;
}

void write_corpus(const std::string& path, const std::vector<std::vector<std::string>>& raw) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write corpus file: " + path);
  for (const auto& conv : raw) {
    for (size_t i = 0; i < conv.size(); ++i) {
      if (i > 0) out << '\t';
      out << conv[i];
    }
    out << '\n';
  }
}

void write_vocab(const std::string& path, const Vocab& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write vocab file: " + path);
  for (const auto& e : vocab.words()) out << e.word << '\t' << e.count << '\n';
}

Vocab read_vocab(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocab file: " + path);
  std::vector<VocabEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) {
      throw FormatError(FormatError::Code::kCorrupt, "bad vocab line: " + line);
    }
    entries.push_back({line.substr(0, tab), std::stoull(line.substr(tab + 1))});
  }
  return Vocab(std::move(entries));
}

void write_pairs(const std::string& path, const std::vector<MessagePair>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write pair file: " + path);
  for (const auto& p : pairs) out << p.current.raw << '\t' << p.next.raw << '\n';
}

std::vector<MessagePair> read_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open pair file: " + path);
  std::vector<MessagePair> pairs;
  std::string line;
  uint64_t id = 0;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    const auto parts = split(line, '\t');
    if (parts.size() != 2) {
      throw FormatError(FormatError::Code::kCorrupt, "bad pair line: " + line);
    }
    pairs.push_back({make_message(parts[0], id, 0), make_message(parts[1], id, 1)});
    ++id;
  }
  return pairs;
}

}  // namespace sr::corpus

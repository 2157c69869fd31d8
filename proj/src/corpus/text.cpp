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

#include "sr/corpus/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "sr/common/error.hpp"

namespace sr::corpus {
namespace {

// Same content as data/emoticons.txt.
const char* const kBuiltinEmoticons[] = {
    ":)", ":))", ":-)", ":(", ":((", ":-(", ":d", ":-d", ":p", ":-p", ";)",
    ";-)", ":o", ":-o", ":*", ":-*", ":/", ":-/", ":|", ":'(", "<3", "</3",
    "^_^", "^^", "-_-", ">_<", "o_o", ":3", "=)", "=(", "xd", ":$"};

size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;  // stray continuation byte: treat as a single unit
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

}  // namespace

EmoticonLexicon::EmoticonLexicon(std::vector<std::string> entries) : entries_(std::move(entries)) {
  for (auto& e : entries_) e = to_lower(e);
  std::erase_if(entries_, [](const std::string& e) { return e.empty(); });
  std::sort(entries_.begin(), entries_.end(), [](const std::string& a, const std::string& b) {
    return a.size() != b.size() ? a.size() > b.size() : a < b;
  });
  entries_.erase(std::unique(entries_.begin(), entries_.end()), entries_.end());
}

const EmoticonLexicon& EmoticonLexicon::builtin() {
  static const EmoticonLexicon lexicon(
      std::vector<std::string>(std::begin(kBuiltinEmoticons), std::end(kBuiltinEmoticons)));
  return lexicon;
}

EmoticonLexicon EmoticonLexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open emoticon lexicon: " + path);
  std::vector<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || is_space(line.back()))) line.pop_back();
    if (line.empty() || line.starts_with("##")) continue;
    entries.push_back(line);
  }
  return EmoticonLexicon(std::move(entries));
}

size_t EmoticonLexicon::match_at(std::string_view text, size_t pos) const {
  const std::string_view rest = text.substr(pos);
  for (const auto& e : entries_) {
    if (!rest.starts_with(e)) continue;
    // Purely alphanumeric entries ("xd") only count as whole tokens.
    const bool alpha_only = std::all_of(e.begin(), e.end(), is_alnum);
    if (alpha_only) {
      const bool left_ok = pos == 0 || !is_alnum(text[pos - 1]);
      const bool right_ok = pos + e.size() == text.size() || !is_alnum(text[pos + e.size()]);
      if (!left_ok || !right_ok) continue;
    }
    return e.size();
  }
  return 0;
}

std::string normalize_repeats(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::string_view prev;
  int run = 0;
  size_t i = 0;
  while (i < text.size()) {
    const size_t len = std::min(utf8_length(static_cast<unsigned char>(text[i])), text.size() - i);
    const std::string_view cp = text.substr(i, len);
    run = (cp == prev) ? run + 1 : 1;
    if (run <= 2) out.append(cp);
    prev = cp;
    i += len;
  }
  return out;
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<Token> tokenize(std::string_view text, const EmoticonLexicon& lexicon) {
  const std::string lower = to_lower(text);
  std::vector<Token> tokens;
  size_t i = 0;
  while (i < lower.size()) {
    while (i < lower.size() && is_space(lower[i])) ++i;
    size_t end = i;
    while (end < lower.size() && !is_space(lower[end])) ++end;
    if (end == i) break;
    const std::string_view chunk = std::string_view(lower).substr(i, end - i);
    i = end;
    if (chunk == kStickerMarker) {
      tokens.push_back({TokenKind::kSticker, std::string(chunk)});
      continue;
    }
    // Second pass over the chunk: peel emoticons off, keep the rest as words.
    std::string word;
    size_t p = 0;
    while (p < chunk.size()) {
      const size_t m = lexicon.match_at(chunk, p);
      if (m > 0) {
        if (!word.empty()) tokens.push_back({TokenKind::kWord, std::move(word)});
        word.clear();
        tokens.push_back({TokenKind::kEmoticon, std::string(chunk.substr(p, m))});
        p += m;
      } else {
        word.push_back(chunk[p]);
        ++p;
      }
    }
    if (!word.empty()) tokens.push_back({TokenKind::kWord, std::move(word)});
  }
  return tokens;
}

std::string join_tokens(const std::vector<Token>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += tokens[i].text;
  }
  return out;
}

std::string phrase_key(std::string_view raw, const EmoticonLexicon& lexicon) {
  return join_tokens(tokenize(normalize_repeats(raw), lexicon));
}

std::string normalize_typed(std::string_view typed) {
  std::string out = normalize_repeats(to_lower(typed));
  size_t start = 0;
  while (start < out.size() && out[start] == ' ') ++start;
  return out.substr(start);
}

int word_count(const std::vector<Token>& tokens) {
  return static_cast<int>(std::count_if(tokens.begin(), tokens.end(), [](const Token& t) {
    return t.kind == TokenKind::kWord;
  }));
}

}  // namespace sr::corpus

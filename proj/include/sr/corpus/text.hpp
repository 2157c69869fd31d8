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

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sr::corpus {

enum class TokenKind { kWord, kEmoticon, kSticker };

struct Token {
  TokenKind kind = TokenKind::kWord;
  std::string text;

  bool operator==(const Token&) const = default;
};

// Reserved token standing in for a sticker inside chat text.
inline constexpr std::string_view kStickerMarker = "<sticker>";

// Emoticon lexicon matched longest-first. Entries are stored lowercased.
class EmoticonLexicon {
 public:
  EmoticonLexicon() = default;
  explicit EmoticonLexicon(std::vector<std::string> entries);

  // Lexicon shipped with the library (mirrors data/emoticons.txt).
  static const EmoticonLexicon& builtin();
  // One emoticon per line; blank lines and lines starting with "##" ignored.
  static EmoticonLexicon load(const std::string& path);

  // Length in bytes of the longest entry starting at text[pos], or 0.
  size_t match_at(std::string_view text, size_t pos) const;

  const std::vector<std::string>& entries() const { return entries_; }

 private:
  std::vector<std::string> entries_;  // sorted by descending length
};

// Collapses every run of more than two identical characters (UTF-8 code
// points) to exactly two.
std::string normalize_repeats(std::string_view text);

// ASCII lowercasing; other bytes are left as-is.
std::string to_lower(std::string_view text);

// Lowercased whitespace split with emoticons split off as their own tokens,
// even when glued to a word. The sticker marker is kept as a sticker token.
std::vector<Token> tokenize(std::string_view text,
                            const EmoticonLexicon& lexicon = EmoticonLexicon::builtin());

// Canonical phrase string: normalize, tokenize and join tokens with a space.
// This is the key used by clustering, the trie and ground-truth tables.
std::string phrase_key(std::string_view raw,
                       const EmoticonLexicon& lexicon = EmoticonLexicon::builtin());

std::string join_tokens(const std::vector<Token>& tokens);

// Text typed so far, prepared for a trie lookup: lowercased, repeat
// normalized, leading spaces removed.
std::string normalize_typed(std::string_view typed);

int word_count(const std::vector<Token>& tokens);

}  // namespace sr::corpus

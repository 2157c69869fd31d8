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

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sr/corpus/text.hpp"

namespace sr::corpus {

struct Message {
  std::string raw;
  std::vector<Token> tokens;
  uint64_t conversation_id = 0;
  uint32_t position = 0;

  std::string phrase() const { return join_tokens(tokens); }
  int words() const { return word_count(tokens); }
  bool sticker_only() const;
};

Message make_message(std::string_view raw, uint64_t conversation_id = 0, uint32_t position = 0);

using Conversation = std::vector<Message>;

struct MessagePair {
  Message current;
  Message next;
};

inline constexpr int kMaxPairWords = 5;

// Adjacent (m_i, m_{i+1}) pairs inside each conversation where both messages
// have at most max_words word tokens. Empty and sticker-only messages never
// take part in a pair.
std::vector<MessagePair> extract_pairs(const std::vector<Conversation>& conversations,
                                       int max_words = kMaxPairWords);

struct VocabEntry {
  std::string word;
  uint64_t count = 0;
};

// Word and character inventories. Ids 0 and 1 are reserved for padding and
// unknown entries in both tables.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocab() = default;
  explicit Vocab(std::vector<VocabEntry> ranked_words);

  const std::vector<VocabEntry>& words() const { return words_; }
  const std::vector<unsigned char>& chars() const { return chars_; }

  int word_table_size() const { return static_cast<int>(words_.size()) + 2; }
  int char_table_size() const { return static_cast<int>(chars_.size()) + 2; }

  int word_id(std::string_view word) const;
  int char_id(unsigned char c) const;
  bool contains(std::string_view word) const { return word_id(word) != kUnk; }

 private:
  std::vector<VocabEntry> words_;
  std::vector<unsigned char> chars_;
  std::unordered_map<std::string, int> word_index_;
  std::array<int, 256> char_index_ = make_unk_index();

  static std::array<int, 256> make_unk_index() {
    std::array<int, 256> a;
    a.fill(kUnk);
    return a;
  }
};

// Ranks tokens over both sides of every pair by frequency, ties broken
// lexicographically, and keeps the top max_words.
Vocab build_vocab(const std::vector<MessagePair>& pairs, size_t max_words);

// Corpus file: one conversation per line, messages separated by tabs.
std::vector<Conversation> read_corpus(const std::string& path);
void write_corpus(const std::string& path, const std::vector<std::vector<std::string>>& raw);

void write_vocab(const std::string& path, const Vocab& vocab);
Vocab read_vocab(const std::string& path);

// Pair file: current \t next (raw text), one pair per line.
void write_pairs(const std::string& path, const std::vector<MessagePair>& pairs);
std::vector<MessagePair> read_pairs(const std::string& path);

}  // namespace sr::corpus

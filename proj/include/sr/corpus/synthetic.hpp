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

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sr/corpus/corpus.hpp"

namespace sr::corpus {

// Word-level rewrites modelling how chat users respell the same utterance.
enum class VariantRule {
  kDropVowels,        // "kar" -> "kr", "raha" -> "rha", "where" -> "whr"
  kChatSubstitution,  // lexicon of chat spellings: good -> gud, night -> n8
  kRepeatChars,       // elongation: "hey" -> "heyyyy" (normalizes to "heyy")
  kTransliteration,   // romanization respellings: accha -> acha / achha
};

std::string_view rule_name(VariantRule rule);

// Every respelling of one word produced by a rule (the word itself excluded).
std::vector<std::string> apply_rule(VariantRule rule, std::string_view word);

// Phrase variants obtained by rewriting any nonempty subset of the words with
// the rule; the input phrase itself is excluded.
std::set<std::string> enumerate_rule_variants(std::string_view phrase, VariantRule rule);

struct SurfaceVariant {
  std::string text;  // raw text as emitted into the corpus
  double weight = 0.0;
};

struct SyntheticIntent {
  int intent_id = 0;
  std::string canonical_phrase;
  std::vector<VariantRule> variant_rules;
  std::map<int, double> reply_distribution;  // sums to 1
  std::vector<SurfaceVariant> variants;      // first entry is the canonical phrase
};

struct SyntheticOptions {
  uint64_t seed = 1;
  int n_intents = 200;
  int n_conversations = 50;
  int mean_length = 12;
};

struct SyntheticCorpus {
  std::vector<SyntheticIntent> intents;
  std::vector<std::vector<std::string>> conversations;  // raw message text
  std::map<std::string, int> ground_truth;              // phrase_key -> intent_id

  std::vector<Conversation> parsed() const;
};

SyntheticCorpus generate_synthetic_corpus(const SyntheticOptions& options);

void write_ground_truth(const std::string& path, const std::map<std::string, int>& ground_truth);
std::map<std::string, int> read_ground_truth(const std::string& path);

// intents.tsv: id \t canonical \t rules \t reply distribution ("id:p,id:p").
void write_intents(const std::string& path, const std::vector<SyntheticIntent>& intents);
std::vector<SyntheticIntent> read_intents(const std::string& path);

}  // namespace sr::corpus

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

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sr/clusterer/cluster_model.hpp"

namespace sr::trie {

struct TrieEntry {
  std::string phrase;
  int cluster_id = 0;
  uint64_t freq = 0;
};

// Per-cluster typed-text scores for one prefix: P(g | typed) is the summed
// frequency of matching phrases in cluster g over the summed frequency of all
// matching phrases.
struct TrieScoreResult {
  std::vector<std::pair<int, double>> scores;  // sorted by cluster id, all > 0
  size_t matched = 0;                          // number of matching phrases
  uint64_t total_freq = 0;
  bool empty_match = true;

  double score(int cluster_id) const;
};

// Byte-wise prefix trie over normalized phrases. Entries are kept sorted so
// every node covers a contiguous entry range; nodes cache the summed
// frequency of their range.
//
// insert() must not run concurrently with queries. Once no more inserts
// happen, concurrent const queries are safe.
class TypedTrie {
 public:
  static constexpr uint16_t kFormatVersion = 1;

  TypedTrie() = default;
  TypedTrie(const TypedTrie& other);
  TypedTrie& operator=(const TypedTrie& other);
  TypedTrie(TypedTrie&& other) noexcept;
  TypedTrie& operator=(TypedTrie&& other) noexcept;

  // Replaces the payload if the phrase is already present. Throws on an empty
  // phrase, a negative cluster id or a zero frequency.
  void insert(std::string_view phrase, int cluster_id, uint64_t freq);

  std::optional<TrieEntry> find(std::string_view phrase) const;
  // Stored phrases starting with typ (exact match included), sorted.
  std::span<const TrieEntry> prefix_query(std::string_view typ) const;
  TrieScoreResult trie_scores(std::string_view typ) const;

  size_t size() const;
  size_t node_count() const;
  int num_clusters() const;
  std::span<const TrieEntry> entries() const;

  // Canonical blob: magic "HTRIE1", u16 version, u32 count, then sorted
  // entries of (u16 length, phrase bytes, u32 cluster id, u64 freq).
  std::vector<uint8_t> serialize() const;
  static TypedTrie deserialize(std::span<const uint8_t> bytes);

  static TypedTrie from_cluster_table(const std::vector<clusterer::ClassRow>& rows);

 private:
  struct Node {
    uint32_t begin = 0;
    uint32_t end = 0;
    uint64_t total = 0;
    uint32_t first_child = 0;
    uint32_t child_count = 0;
  };

  void ensure_index() const;
  void rebuild() const;
  int locate(std::string_view typ) const;

  std::map<std::string, std::pair<int, uint64_t>> staged_;
  mutable std::vector<TrieEntry> entries_;
  mutable std::vector<Node> nodes_;
  mutable std::vector<std::pair<uint8_t, uint32_t>> edges_;
  mutable int num_clusters_ = 0;
  mutable std::atomic<bool> dirty_{false};
  mutable std::mutex build_mu_;
};

}  // namespace sr::trie

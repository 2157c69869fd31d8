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

#include "sr/trie/typed_trie.hpp"

#include <algorithm>

#include "sr/common/binary_io.hpp"
#include "sr/common/error.hpp"

namespace sr::trie {
namespace {

constexpr std::string_view kMagic = "HTRIE1";

}  // namespace

double TrieScoreResult::score(int cluster_id) const {
  const auto it = std::lower_bound(scores.begin(), scores.end(), std::make_pair(cluster_id, -1.0));
  return it != scores.end() && it->first == cluster_id ? it->second : 0.0;
}

TypedTrie::TypedTrie(const TypedTrie& other) { *this = other; }

TypedTrie& TypedTrie::operator=(const TypedTrie& other) {
  if (this == &other) return *this;
  other.ensure_index();
  staged_ = other.staged_;
  entries_ = other.entries_;
  nodes_ = other.nodes_;
  edges_ = other.edges_;
  num_clusters_ = other.num_clusters_;
  dirty_.store(false);
  return *this;
}

TypedTrie::TypedTrie(TypedTrie&& other) noexcept { *this = std::move(other); }

TypedTrie& TypedTrie::operator=(TypedTrie&& other) noexcept {
  if (this == &other) return *this;
  staged_ = std::move(other.staged_);
  entries_ = std::move(other.entries_);
  nodes_ = std::move(other.nodes_);
  edges_ = std::move(other.edges_);
  num_clusters_ = other.num_clusters_;
  dirty_.store(other.dirty_.load());
  return *this;
}

void TypedTrie::insert(std::string_view phrase, int cluster_id, uint64_t freq) {
  if (phrase.empty()) throw Error("empty phrase");
  if (phrase.size() > 0xffff) throw Error("phrase too long");
  if (cluster_id < 0) throw Error("negative cluster id");
  if (freq == 0) throw Error("phrase frequency must be > 0");
  staged_[std::string(phrase)] = {cluster_id, freq};
  dirty_.store(true, std::memory_order_release);
}

void TypedTrie::ensure_index() const {
  if (!dirty_.load(std::memory_order_acquire)) return;
  std::lock_guard<std::mutex> lock(build_mu_);
  if (!dirty_.load(std::memory_order_relaxed)) return;
  rebuild();
  dirty_.store(false, std::memory_order_release);
}

void TypedTrie::rebuild() const {
  entries_.clear();
  entries_.reserve(staged_.size());
  num_clusters_ = 0;
  for (const auto& [phrase, payload] : staged_) {
    entries_.push_back({phrase, payload.first, payload.second});
    num_clusters_ = std::max(num_clusters_, payload.first + 1);
  }
  nodes_.clear();
  edges_.clear();
  // Breadth-first: each node at depth d covers entries sharing d leading bytes.
  struct Pending {
    uint32_t node;
    size_t depth;
  };
  nodes_.push_back({0, static_cast<uint32_t>(entries_.size()), 0, 0, 0});
  std::vector<Pending> queue{{0, 0}};
  for (size_t qi = 0; qi < queue.size(); ++qi) {
    const auto [id, depth] = queue[qi];
    uint32_t b = nodes_[id].begin;
    const uint32_t e = nodes_[id].end;
    uint64_t total = 0;
    for (uint32_t i = b; i < e; ++i) total += entries_[i].freq;
    nodes_[id].total = total;
    if (b < e && entries_[b].phrase.size() == depth) ++b;  // terminal entry sorts first
    nodes_[id].first_child = static_cast<uint32_t>(edges_.size());
    while (b < e) {
      const auto byte = static_cast<uint8_t>(entries_[b].phrase[depth]);
      uint32_t j = b;
      while (j < e && static_cast<uint8_t>(entries_[j].phrase[depth]) == byte) ++j;
      const auto child = static_cast<uint32_t>(nodes_.size());
      nodes_.push_back({b, j, 0, 0, 0});
      edges_.emplace_back(byte, child);
      queue.push_back({child, depth + 1});
      ++nodes_[id].child_count;
      b = j;
    }
  }
}

int TypedTrie::locate(std::string_view typ) const {
  ensure_index();
  if (nodes_.empty()) return -1;
  uint32_t node = 0;
  for (char ch : typ) {
    const auto byte = static_cast<uint8_t>(ch);
    const Node& n = nodes_[node];
    const auto first = edges_.begin() + n.first_child;
    const auto last = first + n.child_count;
    const auto it = std::lower_bound(first, last, byte, [](const auto& edge, uint8_t b) { return edge.first < b; });
    if (it == last || it->first != byte) return -1;
    node = it->second;
  }
  return static_cast<int>(node);
}

std::optional<TrieEntry> TypedTrie::find(std::string_view phrase) const {
  if (phrase.empty()) return std::nullopt;
  const int node = locate(phrase);
  if (node < 0) return std::nullopt;
  const Node& n = nodes_[node];
  if (n.begin < n.end && entries_[n.begin].phrase == phrase) return entries_[n.begin];
  return std::nullopt;
}

std::span<const TrieEntry> TypedTrie::prefix_query(std::string_view typ) const {
  if (typ.empty()) return {};
  const int node = locate(typ);
  if (node < 0) return {};
  const Node& n = nodes_[node];
  return std::span<const TrieEntry>(entries_).subspan(n.begin, n.end - n.begin);
}

TrieScoreResult TypedTrie::trie_scores(std::string_view typ) const {
  TrieScoreResult r;
  if (typ.empty()) return r;
  const int node = locate(typ);
  if (node < 0) return r;
  const Node& n = nodes_[node];
  if (n.begin == n.end) return r;
  r.empty_match = false;
  r.matched = n.end - n.begin;
  r.total_freq = n.total;
  thread_local std::vector<uint64_t> sums;
  thread_local std::vector<int> touched;
  if (sums.size() < static_cast<size_t>(num_clusters_)) sums.resize(num_clusters_, 0);
  touched.clear();
  for (uint32_t i = n.begin; i < n.end; ++i) {
    const TrieEntry& e = entries_[i];
    if (sums[e.cluster_id] == 0) touched.push_back(e.cluster_id);
    sums[e.cluster_id] += e.freq;
  }
  std::sort(touched.begin(), touched.end());
  r.scores.reserve(touched.size());
  const double total = static_cast<double>(n.total);
  for (int g : touched) {
    r.scores.emplace_back(g, static_cast<double>(sums[g]) / total);
    sums[g] = 0;
  }
  return r;
}

size_t TypedTrie::size() const {
  ensure_index();
  return entries_.size();
}

size_t TypedTrie::node_count() const {
  ensure_index();
  return nodes_.size();
}

int TypedTrie::num_clusters() const {
  ensure_index();
  return num_clusters_;
}

std::span<const TrieEntry> TypedTrie::entries() const {
  ensure_index();
  return entries_;
}

std::vector<uint8_t> TypedTrie::serialize() const {
  ensure_index();
  ByteWriter w;
  w.bytes(kMagic);
  w.u16(kFormatVersion);
  w.u32(static_cast<uint32_t>(entries_.size()));
  for (const auto& e : entries_) {
    w.str16(e.phrase);
    w.u32(static_cast<uint32_t>(e.cluster_id));
    w.u64(e.freq);
  }
  return w.take();
}

TypedTrie TypedTrie::deserialize(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.remaining() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) {
    throw FormatError(FormatError::Code::kBadMagic, "not a trie asset (bad magic)");
  }
  const uint16_t version = r.u16();
  if (version != kFormatVersion) {
    throw FormatError(FormatError::Code::kBadVersion, "unsupported trie version " + std::to_string(version));
  }
  const uint32_t count = r.u32();
  TypedTrie t;
  std::string prev;
  for (uint32_t i = 0; i < count; ++i) {
    std::string phrase = r.str16();
    const uint32_t cluster = r.u32();
    const uint64_t freq = r.u64();
    if (phrase.empty() || freq == 0 || cluster > 0x7fffffffU) {
      throw FormatError(FormatError::Code::kCorrupt, "invalid trie entry " + std::to_string(i));
    }
    if (i > 0 && !(prev < phrase)) {
      throw FormatError(FormatError::Code::kCorrupt, "trie entries not in canonical order");
    }
    t.staged_.emplace_hint(t.staged_.end(), phrase, std::make_pair(static_cast<int>(cluster), freq));
    prev = std::move(phrase);
  }
  if (!r.done()) throw FormatError(FormatError::Code::kCorrupt, "trailing bytes after trie entries");
  t.dirty_.store(true);
  t.ensure_index();
  return t;
}

TypedTrie TypedTrie::from_cluster_table(const std::vector<clusterer::ClassRow>& rows) {
  TypedTrie t;
  for (const auto& r : rows) t.insert(r.phrase, r.cluster_id, r.freq);
  t.ensure_index();
  return t;
}

}  // namespace sr::trie

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

#include <chrono>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "sr/clusterer/cluster_model.hpp"
#include "sr/common/cluster_score.hpp"
#include "sr/common/error.hpp"
#include "sr/hybrid/hybrid.hpp"
#include "sr/replynet/replynet.hpp"
#include "sr/stickers/sticker_map.hpp"
#include "sr/trie/typed_trie.hpp"

namespace sr::service {

// Asset directory layout. The first four files form the client bundle; the
// reply net and its vocabulary stay on the server.
inline constexpr const char* kTrieFile = "trie.bin";
inline constexpr const char* kStickerFile = "stickers.bin";
inline constexpr const char* kClusterFile = "clusters.tsv";
inline constexpr const char* kCombinerFile = "combiner.json";
inline constexpr const char* kReplyNetFile = "reply_net.ckpt";
inline constexpr const char* kVocabFile = "vocab.tsv";

inline constexpr size_t kMaxTextBytes = 1024;

// Carries the HTTP status the error maps to.
class ServiceError : public Error {
 public:
  ServiceError(int status, const std::string& what) : Error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct AssetBundle {
  std::vector<uint8_t> trie;
  std::vector<uint8_t> sticker_map;
  std::string cluster_table;
  std::string combiner;
  std::string version;  // hex FNV-1a over every asset file

  nlohmann::json to_json() const;
};

// Immutable snapshot of one asset directory.
struct Assets {
  std::string dir;
  AssetBundle bundle;
  trie::TypedTrie trie;
  stickers::StickerMapping mapping;
  hybrid::CombinerWeights weights;
  std::unique_ptr<replynet::ClusterNet> reply_net;  // null: reply term is zero
  double t_reply = replynet::kDefaultReplyThreshold;
};

std::shared_ptr<const Assets> load_assets(const std::string& dir);

struct EngineConfig {
  std::string assets_dir;
  std::string geo;  // selects assets_dir/geo when that directory exists
  size_t cache_capacity = 10000;
  int top_k = 3;
  size_t n_stickers = 3;
  // Overrides the threshold stored in the reply net when set.
  std::optional<double> t_reply;

  std::string resolved_dir() const;
};

struct RouteResult {
  std::vector<ClusterScore> clusters;
  std::string version;
  bool degenerate = false;
};

struct PredictResult {
  std::vector<hybrid::ScoredCluster> clusters;
  stickers::Recommendation stickers;
  double latency_ms = 0.0;
  std::string version;
};

struct AssetsResponse {
  bool not_modified = false;
  std::shared_ptr<const Assets> assets;
};

// LRU map from message text to thresholded reply scores.
class ReplyCache {
 public:
  explicit ReplyCache(size_t capacity) : capacity_(capacity) {}

  std::optional<std::vector<ClusterScore>> get(const std::string& key);
  void put(const std::string& key, std::vector<ClusterScore> value);
  size_t size() const;
  void clear();

 private:
  using Entry = std::pair<std::string, std::vector<ClusterScore>>;
  size_t capacity_;
  mutable std::mutex mu_;
  std::list<Entry> order_;
  std::unordered_map<std::string, std::list<Entry>::iterator> index_;
};

class Engine {
 public:
  explicit Engine(EngineConfig config);

  // Loads (or reloads) the asset directory and swaps the snapshot in one
  // step. On failure the previous snapshot stays active.
  void reload();
  bool loaded() const;
  std::shared_ptr<const Assets> assets() const;

  RouteResult route_message(const std::string& session_id, std::string_view text);
  PredictResult predict(const std::string& session_id, std::string_view typed);
  AssetsResponse get_assets(std::string_view since) const;
  nlohmann::json health() const;

  const EngineConfig& config() const { return config_; }
  size_t num_sessions() const;
  size_t cache_size() const { return cache_.size(); }

 private:
  struct Session {
    std::mutex mu;
    std::string last_received;
    std::vector<ClusterScore> prev_scores;
    std::string version;
  };

  std::shared_ptr<const Assets> require_assets() const;
  std::shared_ptr<Session> session(const std::string& id);
  std::vector<ClusterScore> reply_scores(const Assets& assets, std::string_view text, bool& degenerate);

  EngineConfig config_;
  mutable std::mutex assets_mu_;
  std::shared_ptr<const Assets> assets_;
  mutable std::mutex sessions_mu_;
  std::unordered_map<std::string, std::shared_ptr<Session>> sessions_;
  ReplyCache cache_;
};

}  // namespace sr::service

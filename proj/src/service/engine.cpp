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

#include "sr/service/engine.hpp"

#include <filesystem>

#include "sr/common/binary_io.hpp"
#include "sr/corpus/corpus.hpp"

namespace sr::service {

namespace fs = std::filesystem;

nlohmann::json AssetBundle::to_json() const {
  return {{"version", version},
          {"trie", base64_encode(trie)},
          {"sticker_map", base64_encode(sticker_map)},
          {"clusters", cluster_table},
          {"combiner", combiner}};
}

std::shared_ptr<const Assets> load_assets(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw ServiceError(503, "asset directory not found: " + dir);
  auto a = std::make_shared<Assets>();
  a->dir = dir;
  AssetBundle& b = a->bundle;
  b.trie = read_file_bytes((root / kTrieFile).string());
  b.sticker_map = read_file_bytes((root / kStickerFile).string());
  b.cluster_table = read_text_file((root / kClusterFile).string());
  b.combiner = read_text_file((root / kCombinerFile).string());

  a->trie = trie::TypedTrie::deserialize(b.trie);
  a->mapping = stickers::deserialize(b.sticker_map);
  a->weights = hybrid::weights_from_json(nlohmann::json::parse(b.combiner));

  // Version covers every file, each framed by name and length.
  uint64_t h = fnv1a64({});
  auto mix = [&h](std::string_view name, std::span<const uint8_t> bytes) {
    ByteWriter w;
    w.str16(name);
    w.u64(bytes.size());
    h = fnv1a64(w.buffer(), h);
    h = fnv1a64(bytes, h);
  };
  auto as_bytes = [](const std::string& s) {
    return std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(s.data()), s.size());
  };
  mix(kTrieFile, b.trie);
  mix(kStickerFile, b.sticker_map);
  mix(kClusterFile, as_bytes(b.cluster_table));
  mix(kCombinerFile, as_bytes(b.combiner));

  const fs::path net = root / kReplyNetFile;
  if (fs::exists(net)) {
    const std::vector<uint8_t> net_bytes = read_file_bytes(net.string());
    const std::string vocab_text = read_text_file((root / kVocabFile).string());
    mix(kReplyNetFile, net_bytes);
    mix(kVocabFile, as_bytes(vocab_text));
    a->reply_net = std::make_unique<replynet::ClusterNet>(replynet::ClusterNet::from_checkpoint(
        nn::decode_checkpoint(net_bytes), corpus::read_vocab((root / kVocabFile).string())));
    if (a->reply_net->kind() != replynet::NetKind::kReply) throw ServiceError(503, "asset reply net is not a reply model");
    a->t_reply = a->reply_net->t_reply();
  }
  b.version = hex64(h);
  return a;
}

std::string EngineConfig::resolved_dir() const {
  if (!geo.empty()) {
    const fs::path p = fs::path(assets_dir) / geo;
    if (fs::is_directory(p)) return p.string();
  }
  return assets_dir;
}

std::optional<std::vector<ClusterScore>> ReplyCache::get(const std::string& key) {
  std::lock_guard lock(mu_);
  const auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  order_.splice(order_.begin(), order_, it->second);
  return it->second->second;
}

void ReplyCache::put(const std::string& key, std::vector<ClusterScore> value) {
  if (capacity_ == 0) return;
  std::lock_guard lock(mu_);
  const auto it = index_.find(key);
  if (it != index_.end()) {
    it->second->second = std::move(value);
    order_.splice(order_.begin(), order_, it->second);
    return;
  }
  order_.emplace_front(key, std::move(value));
  index_[key] = order_.begin();
  if (order_.size() > capacity_) {
    index_.erase(order_.back().first);
    order_.pop_back();
  }
}

size_t ReplyCache::size() const {
  std::lock_guard lock(mu_);
  return order_.size();
}

void ReplyCache::clear() {
  std::lock_guard lock(mu_);
  order_.clear();
  index_.clear();
}

Engine::Engine(EngineConfig config) : config_(std::move(config)), cache_(config_.cache_capacity) {
  if (config_.t_reply && !(*config_.t_reply >= 0.0 && *config_.t_reply <= 1.0)) {
    throw ConfigError("t_reply must be in [0, 1]");
  }
}

void Engine::reload() {
  std::shared_ptr<const Assets> fresh = load_assets(config_.resolved_dir());
  {
    std::lock_guard lock(assets_mu_);
    assets_ = std::move(fresh);
  }
  cache_.clear();
}

bool Engine::loaded() const { return assets() != nullptr; }

std::shared_ptr<const Assets> Engine::assets() const {
  std::lock_guard lock(assets_mu_);
  return assets_;
}

std::shared_ptr<const Assets> Engine::require_assets() const {
  auto a = assets();
  if (!a) throw ServiceError(503, "assets not loaded");
  return a;
}

std::shared_ptr<Engine::Session> Engine::session(const std::string& id) {
  std::lock_guard lock(sessions_mu_);
  auto& s = sessions_[id];
  if (!s) s = std::make_shared<Session>();
  return s;
}

size_t Engine::num_sessions() const {
  std::lock_guard lock(sessions_mu_);
  return sessions_.size();
}

std::vector<ClusterScore> Engine::reply_scores(const Assets& assets, std::string_view text, bool& degenerate) {
  degenerate = false;
  if (!assets.reply_net) return {};
  const double t = config_.t_reply.value_or(assets.t_reply);
  const std::string key = assets.bundle.version + '\n' + std::string(text);
  if (auto hit = cache_.get(key)) return *hit;
  const replynet::ReplyOutput out = assets.reply_net->predict_reply(text);
  degenerate = out.degenerate;
  std::vector<ClusterScore> scores = out.degenerate ? std::vector<ClusterScore>{} : replynet::top_clusters(out.probs, t);
  if (!out.degenerate) cache_.put(key, scores);
  return scores;
}

RouteResult Engine::route_message(const std::string& session_id, std::string_view text) {
  if (text.size() > kMaxTextBytes) throw ServiceError(413, "message longer than 1024 bytes");
  const auto assets = require_assets();
  RouteResult r;
  r.clusters = reply_scores(*assets, text, r.degenerate);
  r.version = assets->bundle.version;
  auto s = session(session_id);
  std::lock_guard lock(s->mu);
  s->last_received = std::string(text);
  s->prev_scores = r.clusters;
  s->version = r.version;
  return r;
}

PredictResult Engine::predict(const std::string& session_id, std::string_view typed) {
  const auto start = std::chrono::steady_clock::now();
  if (typed.size() > kMaxTextBytes) throw ServiceError(413, "typed text longer than 1024 bytes");
  const auto assets = require_assets();
  std::vector<ClusterScore> prev;
  {
    auto s = session(session_id);
    std::lock_guard lock(s->mu);
    prev = s->prev_scores;
  }
  PredictResult r;
  r.clusters = hybrid::predict(prev, typed, assets->trie, assets->weights, config_.top_k);
  std::vector<ClusterScore> ranked;
  ranked.reserve(r.clusters.size());
  for (const auto& c : r.clusters) ranked.push_back({c.cluster_id, c.q});
  r.stickers = stickers::recommend(ranked, assets->mapping, config_.n_stickers);
  r.version = assets->bundle.version;
  r.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

AssetsResponse Engine::get_assets(std::string_view since) const {
  AssetsResponse r;
  r.assets = require_assets();
  r.not_modified = !since.empty() && since == r.assets->bundle.version;
  return r;
}

nlohmann::json Engine::health() const {
  const auto a = assets();
  nlohmann::json j = {{"status", a ? "ok" : "no_assets"},
                      {"geo", config_.geo},
                      {"sessions", num_sessions()},
                      {"cache_entries", cache_size()}};
  if (a) {
    j["version"] = a->bundle.version;
    j["phrases"] = a->trie.size();
    j["clusters"] = a->trie.num_clusters();
    j["reply_model"] = a->reply_net != nullptr;
  }
  return j;
}

}  // namespace sr::service

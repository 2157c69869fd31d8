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
#include <span>
#include <string>
#include <vector>

#include "sr/clusterer/cluster_model.hpp"
#include "sr/common/cluster_score.hpp"
#include "sr/common/matrix.hpp"
#include "sr/corpus/synthetic.hpp"
#include "sr/embedder/encoder.hpp"

namespace sr::stickers {

inline constexpr double kDefaultThreshold = 0.7;

struct Sticker {
  std::string sticker_id;
  std::string pack_id;
  std::vector<std::string> tags;  // normalized like corpus text
  std::string label;
};

// JSON lines: {"sticker_id", "pack_id", "tags": [...], "label"}. Tags are
// normalized on read; a sticker without a usable tag is an error.
std::vector<Sticker> read_catalog(const std::string& path);
void write_catalog(const std::string& path, const std::vector<Sticker>& catalog);
Sticker make_sticker(std::string id, std::string pack, const std::vector<std::string>& raw_tags, std::string label);

// One sticker per intent tagged with its canonical phrase, plus a second
// sticker for every third intent tagged with a respelled variant.
std::vector<Sticker> synthetic_catalog(const std::vector<corpus::SyntheticIntent>& intents);

struct MappedSticker {
  uint32_t sticker = 0;  // index into StickerMapping::stickers
  double similarity = 0.0;
  uint64_t shown = 0;
  uint64_t sent = 0;

  double send_rate() const { return (static_cast<double>(sent) + 1.0) / (static_cast<double>(shown) + 2.0); }
};

struct StickerMapping {
  std::vector<Sticker> stickers;
  // cluster id -> ranked attachments
  std::map<int, std::vector<MappedSticker>> clusters;

  size_t num_attachments() const;
  const std::vector<MappedSticker>* find(int cluster_id) const;
  int sticker_index(std::string_view sticker_id) const;
};

// Attaches a sticker to a cluster when the best cosine similarity between any
// of its tags and any of the cluster's phrases reaches threshold. Attachments
// are ranked by similarity (ties by sticker id).
StickerMapping build_mapping(const std::vector<clusterer::ClassRow>& rows, const std::vector<Sticker>& catalog,
                             const embedder::Encoder& encoder, double threshold = kDefaultThreshold);
// Same, from precomputed L2-normalized embeddings: phrase_vecs has one row per
// entry of rows, tag_vecs one row per tag in catalog order.
StickerMapping build_mapping(const std::vector<clusterer::ClassRow>& rows, const Mat& phrase_vecs,
                             const std::vector<Sticker>& catalog, const Mat& tag_vecs, double threshold);

struct Recommendation {
  struct Item {
    std::string sticker_id;
    std::string label;
    int cluster_id = 0;
  };
  std::vector<Item> items;
  // True when none of the ranked clusters has a mapped sticker.
  bool empty = true;
};

// Round-robin over clusters in rank order, taking each cluster's best sticker
// not yet used, until n are collected or every cluster is exhausted.
Recommendation recommend(std::span<const ClusterScore> ranked_clusters, const StickerMapping& mapping, size_t n);

struct FeedbackEvent {
  int cluster_id = 0;
  std::string sticker_id;
  uint64_t shown = 0;
  uint64_t sent = 0;
};

struct RefreshResult {
  StickerMapping mapping;
  size_t ignored = 0;  // events naming an unattached (cluster, sticker) pair
};

// Adds event counts to the attachments and re-ranks each cluster that has
// feedback by smoothed send rate (sent + 1) / (shown + 2), then similarity,
// then sticker id. The attachment set never changes.
RefreshResult refresh_from_feedback(const StickerMapping& mapping, std::span<const FeedbackEvent> events);

// JSON lines {"cluster_id", "sticker_id", "shown", "sent"}; missing counts
// read as 0.
std::vector<FeedbackEvent> read_feedback(const std::string& path);

// Binary asset: magic "HSMAP1", u16 version, u32 sticker count, per sticker
// (str16 id, str16 pack, str16 label, u16 tag count, str16 tags), u32 cluster
// count, per cluster (u32 id, u32 count, per attachment u32 sticker index,
// f64 similarity, u64 shown, u64 sent).
std::vector<uint8_t> serialize(const StickerMapping& mapping);
StickerMapping deserialize(std::span<const uint8_t> bytes);

}  // namespace sr::stickers

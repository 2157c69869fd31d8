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

#include "sr/stickers/sticker_map.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "json.hpp"
#include "sr/common/binary_io.hpp"
#include "sr/common/error.hpp"
#include "sr/corpus/text.hpp"
#include "sr/kernels/kernels.hpp"

namespace sr::stickers {

namespace {

constexpr std::string_view kMagic = "HSMAP1";
constexpr uint16_t kFormatVersion = 1;

void sort_by_similarity(std::vector<MappedSticker>& list, const std::vector<Sticker>& stickers) {
  std::sort(list.begin(), list.end(), [&](const MappedSticker& a, const MappedSticker& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return stickers[a.sticker].sticker_id < stickers[b.sticker].sticker_id;
  });
}

Mat embed_normalized(const embedder::Encoder& encoder, const std::vector<std::string>& texts) {
  std::vector<embedder::EncodedMessage> batch;
  batch.reserve(texts.size());
  for (const auto& t : texts) batch.push_back(encoder.prepare(t));
  return clusterer::l2_normalize_rows(encoder.embed_batch(batch));
}

}  // namespace

Sticker make_sticker(std::string id, std::string pack, const std::vector<std::string>& raw_tags, std::string label) {
  if (id.empty()) throw Error("sticker without an id");
  Sticker s{std::move(id), std::move(pack), {}, std::move(label)};
  for (const auto& raw : raw_tags) {
    std::string tag = corpus::phrase_key(raw);
    if (!tag.empty() && std::find(s.tags.begin(), s.tags.end(), tag) == s.tags.end()) s.tags.push_back(std::move(tag));
  }
  if (s.tags.empty()) throw Error("sticker " + s.sticker_id + " has no usable tag");
  return s;
}

std::vector<Sticker> read_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open sticker catalog " + path);
  std::vector<Sticker> out;
  std::set<std::string> seen;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(FormatError::Code::kCorrupt, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    Sticker s = make_sticker(j.at("sticker_id").get<std::string>(), j.value("pack_id", ""),
                             j.at("tags").get<std::vector<std::string>>(), j.value("label", ""));
    if (!seen.insert(s.sticker_id).second) throw Error("duplicate sticker id " + s.sticker_id);
    out.push_back(std::move(s));
  }
  return out;
}

void write_catalog(const std::string& path, const std::vector<Sticker>& catalog) {
  std::string text;
  for (const auto& s : catalog) {
    nlohmann::json j = {{"sticker_id", s.sticker_id}, {"pack_id", s.pack_id}, {"tags", s.tags}, {"label", s.label}};
    text += j.dump() + "\n";
  }
  write_text_file(path, text);
}

std::vector<Sticker> synthetic_catalog(const std::vector<corpus::SyntheticIntent>& intents) {
  std::vector<Sticker> out;
  for (const auto& it : intents) {
    const std::string pack = "pack" + std::to_string(it.intent_id / 10);
    const std::string base = "s" + std::to_string(it.intent_id);
    out.push_back(make_sticker(base + "a", pack, {it.canonical_phrase}, it.canonical_phrase));
    if (it.intent_id % 3 == 0 && it.variants.size() > 1) {
      out.push_back(make_sticker(base + "b", pack, {it.variants[1].text}, it.canonical_phrase));
    }
  }
  return out;
}

size_t StickerMapping::num_attachments() const {
  size_t n = 0;
  for (const auto& [id, list] : clusters) n += list.size();
  return n;
}

const std::vector<MappedSticker>* StickerMapping::find(int cluster_id) const {
  const auto it = clusters.find(cluster_id);
  return it == clusters.end() ? nullptr : &it->second;
}

int StickerMapping::sticker_index(std::string_view sticker_id) const {
  for (size_t i = 0; i < stickers.size(); ++i) {
    if (stickers[i].sticker_id == sticker_id) return static_cast<int>(i);
  }
  return -1;
}

StickerMapping build_mapping(const std::vector<clusterer::ClassRow>& rows, const Mat& phrase_vecs,
                             const std::vector<Sticker>& catalog, const Mat& tag_vecs, double threshold) {
  if (phrase_vecs.rows != static_cast<int>(rows.size())) throw Error("one phrase vector per row expected");
  size_t n_tags = 0;
  for (const auto& s : catalog) n_tags += s.tags.size();
  if (tag_vecs.rows != static_cast<int>(n_tags)) throw Error("one tag vector per tag expected");

  StickerMapping mapping;
  mapping.stickers = catalog;
  // best[cluster][sticker] over all phrase and tag pairs
  std::map<int, std::vector<double>> best;
  for (const auto& r : rows) best.try_emplace(r.cluster_id, catalog.size(), -2.0);
  for (size_t p = 0; p < rows.size(); ++p) {
    std::vector<double>& b = best[rows[p].cluster_id];
    int tag = 0;
    for (size_t s = 0; s < catalog.size(); ++s) {
      for (size_t t = 0; t < catalog[s].tags.size(); ++t, ++tag) {
        const double sim = std::clamp(kernels::dot(phrase_vecs.row(static_cast<int>(p)), tag_vecs.row(tag)), -1.0, 1.0);
        b[s] = std::max(b[s], sim);
      }
    }
  }
  for (const auto& [cluster, sims] : best) {
    std::vector<MappedSticker> list;
    for (size_t s = 0; s < sims.size(); ++s) {
      if (sims[s] >= threshold) list.push_back({static_cast<uint32_t>(s), sims[s], 0, 0});
    }
    if (list.empty()) continue;
    sort_by_similarity(list, mapping.stickers);
    mapping.clusters.emplace(cluster, std::move(list));
  }
  return mapping;
}

StickerMapping build_mapping(const std::vector<clusterer::ClassRow>& rows, const std::vector<Sticker>& catalog,
                             const embedder::Encoder& encoder, double threshold) {
  std::vector<std::string> phrases;
  phrases.reserve(rows.size());
  for (const auto& r : rows) phrases.push_back(r.phrase);
  std::vector<std::string> tags;
  for (const auto& s : catalog) tags.insert(tags.end(), s.tags.begin(), s.tags.end());
  const Mat pv = phrases.empty() ? Mat(0, encoder.config().d_out) : embed_normalized(encoder, phrases);
  const Mat tv = tags.empty() ? Mat(0, encoder.config().d_out) : embed_normalized(encoder, tags);
  return build_mapping(rows, pv, catalog, tv, threshold);
}

Recommendation recommend(std::span<const ClusterScore> ranked_clusters, const StickerMapping& mapping, size_t n) {
  Recommendation rec;
  std::vector<const std::vector<MappedSticker>*> lists;
  for (const auto& c : ranked_clusters) {
    const auto* l = mapping.find(c.cluster_id);
    lists.push_back(l != nullptr && !l->empty() ? l : nullptr);
  }
  rec.empty = std::all_of(lists.begin(), lists.end(), [](const auto* l) { return l == nullptr; });
  std::vector<size_t> cursor(lists.size(), 0);
  std::set<uint32_t> used;
  bool progressed = true;
  while (rec.items.size() < n && progressed) {
    progressed = false;
    for (size_t c = 0; c < lists.size() && rec.items.size() < n; ++c) {
      if (lists[c] == nullptr) continue;
      const auto& list = *lists[c];
      while (cursor[c] < list.size() && used.count(list[cursor[c]].sticker) > 0) ++cursor[c];
      if (cursor[c] == list.size()) continue;
      const MappedSticker& m = list[cursor[c]++];
      used.insert(m.sticker);
      const Sticker& s = mapping.stickers[m.sticker];
      rec.items.push_back({s.sticker_id, s.label, ranked_clusters[c].cluster_id});
      progressed = true;
    }
  }
  return rec;
}

RefreshResult refresh_from_feedback(const StickerMapping& mapping, std::span<const FeedbackEvent> events) {
  RefreshResult result{mapping, 0};
  std::set<int> touched;
  for (const auto& e : events) {
    auto it = result.mapping.clusters.find(e.cluster_id);
    const int s = result.mapping.sticker_index(e.sticker_id);
    MappedSticker* hit = nullptr;
    if (it != result.mapping.clusters.end() && s >= 0) {
      for (auto& m : it->second) {
        if (m.sticker == static_cast<uint32_t>(s)) hit = &m;
      }
    }
    if (hit == nullptr) {
      ++result.ignored;
      continue;
    }
    hit->shown += e.shown;
    hit->sent += e.sent;
    touched.insert(e.cluster_id);
  }
  for (auto& [cluster, list] : result.mapping.clusters) {
    const bool has_feedback =
        touched.count(cluster) > 0 ||
        std::any_of(list.begin(), list.end(), [](const MappedSticker& m) { return m.shown > 0 || m.sent > 0; });
    if (!has_feedback) continue;
    const auto& stickers = result.mapping.stickers;
    std::sort(list.begin(), list.end(), [&](const MappedSticker& a, const MappedSticker& b) {
      const double ra = a.send_rate();
      const double rb = b.send_rate();
      if (ra != rb) return ra > rb;
      if (a.similarity != b.similarity) return a.similarity > b.similarity;
      return stickers[a.sticker].sticker_id < stickers[b.sticker].sticker_id;
    });
  }
  return result;
}

std::vector<FeedbackEvent> read_feedback(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open feedback log " + path);
  std::vector<FeedbackEvent> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    FeedbackEvent e;
    e.cluster_id = j.at("cluster_id").get<int>();
    e.sticker_id = j.at("sticker_id").get<std::string>();
    e.shown = j.value("shown", uint64_t{0});
    e.sent = j.value("sent", uint64_t{0});
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<uint8_t> serialize(const StickerMapping& mapping) {
  ByteWriter w;
  w.bytes(kMagic);
  w.u16(kFormatVersion);
  w.u32(static_cast<uint32_t>(mapping.stickers.size()));
  for (const auto& s : mapping.stickers) {
    w.str16(s.sticker_id);
    w.str16(s.pack_id);
    w.str16(s.label);
    w.u16(static_cast<uint16_t>(s.tags.size()));
    for (const auto& t : s.tags) w.str16(t);
  }
  w.u32(static_cast<uint32_t>(mapping.clusters.size()));
  for (const auto& [cluster, list] : mapping.clusters) {
    w.u32(static_cast<uint32_t>(cluster));
    w.u32(static_cast<uint32_t>(list.size()));
    for (const auto& m : list) {
      w.u32(m.sticker);
      w.f64(m.similarity);
      w.u64(m.shown);
      w.u64(m.sent);
    }
  }
  return w.take();
}

StickerMapping deserialize(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.remaining() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) {
    throw FormatError(FormatError::Code::kBadMagic, "not a sticker map asset (bad magic)");
  }
  const uint16_t version = r.u16();
  if (version != kFormatVersion) {
    throw FormatError(FormatError::Code::kBadVersion, "unsupported sticker map version " + std::to_string(version));
  }
  StickerMapping m;
  const uint32_t n_stickers = r.u32();
  for (uint32_t i = 0; i < n_stickers; ++i) {
    Sticker s;
    s.sticker_id = r.str16();
    s.pack_id = r.str16();
    s.label = r.str16();
    const uint16_t n_tags = r.u16();
    for (uint16_t t = 0; t < n_tags; ++t) s.tags.push_back(r.str16());
    if (s.sticker_id.empty() || s.tags.empty()) throw FormatError(FormatError::Code::kCorrupt, "invalid sticker record");
    m.stickers.push_back(std::move(s));
  }
  const uint32_t n_clusters = r.u32();
  int prev = -1;
  for (uint32_t i = 0; i < n_clusters; ++i) {
    const uint32_t cluster = r.u32();
    if (cluster > 0x7fffffffU || static_cast<int>(cluster) <= prev) {
      throw FormatError(FormatError::Code::kCorrupt, "cluster ids not strictly increasing");
    }
    prev = static_cast<int>(cluster);
    const uint32_t count = r.u32();
    std::vector<MappedSticker> list;
    for (uint32_t k = 0; k < count; ++k) {
      MappedSticker ms;
      ms.sticker = r.u32();
      ms.similarity = r.f64();
      ms.shown = r.u64();
      ms.sent = r.u64();
      if (ms.sticker >= m.stickers.size()) throw FormatError(FormatError::Code::kCorrupt, "sticker index out of range");
      list.push_back(ms);
    }
    m.clusters.emplace(prev, std::move(list));
  }
  if (!r.done()) throw FormatError(FormatError::Code::kCorrupt, "trailing bytes after sticker map");
  return m;
}

}  // namespace sr::stickers

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

#include "sr/hybrid/hybrid.hpp"

#include <algorithm>
#include <cmath>

#include "sr/common/error.hpp"
#include "sr/corpus/text.hpp"

namespace sr::hybrid {

void CombinerWeights::validate() const {
  for (double v : {w0, wt, wp0, wp1}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("combiner weights must be finite and >= 0");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("combiner lambda must be > 0");
  if (!(w0 + wt > 0.0)) throw ConfigError("combiner needs w0 + wt > 0");
  if (!(wp0 + wp1 > 0.0)) throw ConfigError("combiner needs wp0 + wp1 > 0");
}

nlohmann::json to_json(const CombinerWeights& w) {
  return {{"w0", w.w0}, {"wt", w.wt}, {"wp0", w.wp0}, {"wp1", w.wp1}, {"lambda", w.lambda}};
}

CombinerWeights weights_from_json(const nlohmann::json& j) {
  const nlohmann::json& c = j.contains("combiner") ? j.at("combiner") : j;
  CombinerWeights w;
  try {
    w.w0 = c.value("w0", w.w0);
    w.wt = c.value("wt", w.wt);
    w.wp0 = c.value("wp0", w.wp0);
    w.wp1 = c.value("wp1", w.wp1);
    w.lambda = c.value("lambda", w.lambda);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("combiner config: ") + e.what());
  }
  w.validate();
  return w;
}

std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::kReply:
      return "reply";
    case Provenance::kTrie:
      return "trie";
    case Provenance::kBoth:
      return "both";
  }
  return "reply";
}

int char_count(std::string_view text) {
  int n = 0;
  for (char c : text) n += (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  return n;
}

PredictionContext make_context(std::vector<ClusterScore> prev_scores, std::string_view typed) {
  PredictionContext ctx;
  ctx.prev_scores = std::move(prev_scores);
  ctx.typed = std::string(typed);
  ctx.nc = char_count(typed);
  return ctx;
}

double combine_one(const CombinerWeights& w, double p_reply, double p_trie, int nc) {
  return (w.w0 + w.wt * p_reply) * (w.wp0 * std::exp(-w.lambda * nc) + w.wp1 * p_trie);
}

HybridScores combine(const PredictionContext& ctx, const trie::TrieScoreResult& trie_result,
                     const CombinerWeights& weights) {
  HybridScores out;
  std::vector<ClusterScore> reply = ctx.prev_scores;
  std::sort(reply.begin(), reply.end(),
            [](const ClusterScore& a, const ClusterScore& b) { return a.cluster_id < b.cluster_id; });
  const auto& trie = trie_result.scores;
  out.clusters.reserve(reply.size() + trie.size());
  size_t i = 0;
  size_t j = 0;
  while (i < reply.size() || j < trie.size()) {
    ScoredCluster c;
    if (j == trie.size() || (i < reply.size() && reply[i].cluster_id < trie[j].first)) {
      c = {reply[i].cluster_id, 0.0, reply[i].score, 0.0, Provenance::kReply};
      ++i;
    } else if (i == reply.size() || trie[j].first < reply[i].cluster_id) {
      c = {trie[j].first, 0.0, 0.0, trie[j].second, Provenance::kTrie};
      ++j;
    } else {
      c = {reply[i].cluster_id, 0.0, reply[i].score, trie[j].second, Provenance::kBoth};
      ++i;
      ++j;
    }
    c.q = combine_one(weights, c.p_reply, c.p_trie, ctx.nc);
    out.clusters.push_back(c);
  }
  return out;
}

std::vector<ScoredCluster> top_k(const HybridScores& scores, int k) {
  if (k < 1) throw ConfigError("k must be >= 1");
  std::vector<ScoredCluster> v = scores.clusters;
  const auto better = [](const ScoredCluster& a, const ScoredCluster& b) {
    if (a.q != b.q) return a.q > b.q;
    if (a.p_trie != b.p_trie) return a.p_trie > b.p_trie;
    return a.cluster_id < b.cluster_id;
  };
  const size_t n = std::min(v.size(), static_cast<size_t>(k));
  std::partial_sort(v.begin(), v.begin() + static_cast<ptrdiff_t>(n), v.end(), better);
  v.resize(n);
  return v;
}

std::vector<ScoredCluster> predict(std::span<const ClusterScore> prev_scores, std::string_view typed,
                                   const trie::TypedTrie& trie, const CombinerWeights& weights, int k) {
  const std::string typ = corpus::normalize_typed(typed);
  PredictionContext ctx = make_context({prev_scores.begin(), prev_scores.end()}, typ);
  return top_k(combine(ctx, trie.trie_scores(typ), weights), k);
}

}  // namespace sr::hybrid

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

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sr/common/cluster_score.hpp"
#include "sr/trie/typed_trie.hpp"

namespace sr::hybrid {

// Q(g) = (w0 + wt * P_reply(g)) * (wp0 * exp(-lambda * nc) + wp1 * P_trie(g))
struct CombinerWeights {
  double w0 = 0.1;
  double wt = 1.0;
  double wp0 = 0.5;
  double wp1 = 1.0;
  double lambda = 0.7;

  void validate() const;
};

nlohmann::json to_json(const CombinerWeights& w);
// Reads the "combiner" object of a run config, or the object itself.
CombinerWeights weights_from_json(const nlohmann::json& j);

enum class Provenance { kReply, kTrie, kBoth };
std::string_view provenance_name(Provenance p);

struct PredictionContext {
  std::vector<ClusterScore> prev_scores;  // sparse; unlisted clusters have P_reply = 0
  std::string typed;
  int nc = 0;  // characters typed
};

// Number of UTF-8 code points.
int char_count(std::string_view text);

PredictionContext make_context(std::vector<ClusterScore> prev_scores, std::string_view typed);

struct ScoredCluster {
  int cluster_id = 0;
  double q = 0.0;
  double p_reply = 0.0;
  double p_trie = 0.0;
  Provenance provenance = Provenance::kReply;
};

struct HybridScores {
  std::vector<ScoredCluster> clusters;  // every cluster present in either source, by id
};

// Evaluates the combiner for one cluster, in exactly the documented order.
double combine_one(const CombinerWeights& w, double p_reply, double p_trie, int nc);

HybridScores combine(const PredictionContext& ctx, const trie::TrieScoreResult& trie_result,
                     const CombinerWeights& weights);

// k highest Q; ties by higher P_trie, then lower cluster id.
std::vector<ScoredCluster> top_k(const HybridScores& scores, int k = 3);

// Normalizes typed text, scores it against the trie, combines with the reply
// scores and returns the top k.
std::vector<ScoredCluster> predict(std::span<const ClusterScore> prev_scores, std::string_view typed,
                                   const trie::TypedTrie& trie, const CombinerWeights& weights, int k = 3);

}  // namespace sr::hybrid

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

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sr/clusterer/cluster_model.hpp"
#include "sr/corpus/synthetic.hpp"
#include "sr/eval/typing.hpp"
#include "sr/hybrid/hybrid.hpp"
#include "sr/replynet/replynet.hpp"
#include "sr/stickers/sticker_map.hpp"
#include "sr/trainer/trainer.hpp"
#include "sr/trie/typed_trie.hpp"

namespace sr::pipeline {

struct PipelineConfig {
  uint64_t seed = 1;
  int n_intents = 50;
  int n_conversations = 600;
  int mean_length = 12;
  // Every test_every-th conversation is held out for evaluation.
  int test_every = 10;
  size_t max_vocab = 50000;

  embedder::EncoderKind kind = embedder::EncoderKind::kTransformer;
  bool charcnn = true;
  int epochs = 8;
  double learning_rate = 1e-3;

  int min_cluster_size = 3;
  size_t top_phrases = 34000;
  size_t max_clusters = 7500;

  replynet::HeadTrainConfig head;
  double t_reply = replynet::kDefaultReplyThreshold;
  hybrid::CombinerWeights weights;
  double sticker_threshold = stickers::kDefaultThreshold;
  // Also trains the (prev, typed) network and its quantized copy.
  bool full_net = true;
  int calibration_size = 256;

  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
};

struct PipelineReport {
  double train_seconds = 0.0;
  double final_loss = 0.0;
  int num_phrases = 0;
  int num_clusters = 0;
  double ari = 0.0;
  double sticker_accuracy = 0.0;
  eval::TypingMetrics hybrid;
  eval::TypingMetrics trie_only;
  std::optional<eval::TypingMetrics> full_net;
  std::optional<eval::TypingMetrics> full_net_quantized;
  size_t float_checkpoint_bytes = 0;
  size_t quantized_checkpoint_bytes = 0;

  nlohmann::json to_json() const;
};

// Everything one run produces, kept in memory for further checks.
struct PipelineRun {
  PipelineConfig config;
  corpus::SyntheticCorpus corpus;
  std::vector<corpus::Conversation> train;
  std::vector<corpus::Conversation> test;
  std::vector<corpus::MessagePair> train_pairs;
  std::vector<corpus::MessagePair> test_pairs;
  corpus::Vocab vocab;
  std::unique_ptr<trainer::DualEncoder> model;
  std::vector<clusterer::PhraseFreq> phrases;
  clusterer::ClusterModel clusters;
  std::vector<clusterer::ClassRow> rows;
  trie::TypedTrie trie;
  std::vector<stickers::Sticker> catalog;
  stickers::StickerMapping mapping;
  std::unique_ptr<replynet::ClusterNet> reply_net;
  std::unique_ptr<replynet::ClusterNet> full_net;
  std::unique_ptr<replynet::ClusterNet> full_net_quantized;
  PipelineReport report;
};

using LogFn = std::function<void(const std::string&)>;

// Generates the synthetic corpus, trains the encoder, clusters phrases, builds
// the trie and sticker map, trains the reply net, and evaluates. When out_dir
// is nonempty every artifact is written there, with the servable assets under
// out_dir/assets.
PipelineRun run_pipeline(const PipelineConfig& config, const std::string& out_dir = "", const LogFn& log = {});

// Examples (prev, cluster of next) for pairs whose next phrase is clustered;
// with prefixes, one example per typed prefix of next (lengths 0..n).
std::vector<replynet::ClusterExample> cluster_examples(const std::vector<corpus::MessagePair>& pairs,
                                                       const std::map<std::string, int>& cluster_of, bool prefixes);
std::map<std::string, int> cluster_lookup(const std::vector<clusterer::ClassRow>& rows);
std::vector<eval::TypingCase> typing_cases(const std::vector<corpus::MessagePair>& pairs);

// Ranking functions for the typing harness.
eval::RankFn hybrid_ranker(const replynet::ClusterNet* reply_net, double t_reply, const trie::TypedTrie& trie,
                           const hybrid::CombinerWeights& weights, int k = 3);
eval::RankFn trie_ranker(const trie::TypedTrie& trie, int k = 3);
eval::RankFn full_net_ranker(const replynet::ClusterNet& net, int k = 3);

// Writes trie.bin, stickers.bin, clusters.tsv, combiner.json and, when given,
// the reply net with its vocabulary.
void write_assets(const std::string& dir, const trie::TypedTrie& trie, const stickers::StickerMapping& mapping,
                  const std::vector<clusterer::ClassRow>& rows, const hybrid::CombinerWeights& weights,
                  const replynet::ClusterNet* reply_net, const corpus::Vocab* vocab);

}  // namespace sr::pipeline

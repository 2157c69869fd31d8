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
#include <string>
#include <vector>

#include "sr/common/matrix.hpp"
#include "sr/corpus/corpus.hpp"
#include "sr/embedder/encoder.hpp"

namespace sr::clusterer {

struct ClusterConfig {
  int min_cluster_size = 5;
  // Only the most frequent phrases are clustered.
  size_t top_phrases = 34000;

  void validate() const;
};

struct PhraseFreq {
  std::string phrase;
  uint64_t freq = 0;
};

// Phrase to cluster assignment. Noise phrases are singleton clusters; ids are
// dense in [0, num_clusters()).
struct ClusterModel {
  std::map<std::string, int> assignment;
  std::vector<std::vector<PhraseFreq>> cluster_phrases;

  int num_clusters() const { return static_cast<int>(cluster_phrases.size()); }
};

// Phrase keys of all messages with at most max_words words, counted and sorted
// by descending frequency (ties lexicographic), truncated to top_phrases.
std::vector<PhraseFreq> count_phrases(const std::vector<corpus::Conversation>& conversations, size_t top_phrases,
                                      int max_words = corpus::kMaxPairWords);

// Rows of `embeddings` scaled to unit length (zero rows left as-is).
Mat l2_normalize_rows(Mat embeddings);

// Builds a model from per-phrase labels (-1 = noise). Cluster ids follow the
// first appearance of each cluster in phrase order; each noise phrase gets its
// own id.
ClusterModel model_from_labels(const std::vector<PhraseFreq>& phrases, const std::vector<int>& labels);

// HDBSCAN over L2-normalized embeddings, one row per phrase.
ClusterModel cluster(const std::vector<PhraseFreq>& phrases, const Mat& embeddings, const ClusterConfig& config);
ClusterModel cluster(const std::vector<PhraseFreq>& phrases, const embedder::Encoder& encoder,
                     const ClusterConfig& config);

struct ClassRow {
  std::string phrase;
  int cluster_id = 0;
  uint64_t freq = 0;
};

// Keeps the g_cap clusters with the largest summed phrase frequency (ties by
// lower id) and renumbers them 0..G-1 in that order. Rows sorted by
// (cluster_id, -freq, phrase).
std::vector<ClassRow> export_classes(const ClusterModel& model, size_t g_cap);

int num_classes(const std::vector<ClassRow>& rows);

// Cluster table TSV: phrase \t cluster_id \t frequency.
void write_cluster_table(const std::string& path, const std::vector<ClassRow>& rows);
std::vector<ClassRow> read_cluster_table(const std::string& path);

// Human-readable dump: one block per cluster with its phrases.
std::string describe_clusters(const std::vector<ClassRow>& rows, size_t max_clusters, size_t max_phrases);

}  // namespace sr::clusterer

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

#include "sr/embedder/encoder.hpp"

namespace sr::eval {

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocResult {
  double auc = 0.0;
  std::vector<RocPoint> curve;  // from (0,0) to (1,1), one point per distinct score
};

// AUC by the rank-sum formulation with ties counted 0.5. labels are 1 for
// positive, 0 for negative. Throws if only one class is present.
RocResult roc_auc(std::span<const double> scores, std::span<const int> labels);

struct PhrasePair {
  std::string a;
  std::string b;
  bool similar = false;
};

using PhrasePairSet = std::vector<PhrasePair>;

// Positives are same-intent phrase pairs, negatives random cross-intent pairs,
// about 3 negatives per 4 positives. max_positives > 0 subsamples positives.
PhrasePairSet build_similarity_set(const std::map<std::string, int>& ground_truth, uint64_t seed,
                                   size_t max_positives = 0);

double cosine(std::span<const double> a, std::span<const double> b);

// Cosine similarity of the two phrase embeddings as the score.
RocResult phrase_similarity_auc(const PhrasePairSet& pairs, const embedder::Encoder& encoder);

// Adjusted Rand index of two labelings over the same phrase set.
double adjusted_rand_index(const std::map<std::string, int>& a, const std::map<std::string, int>& b);

}  // namespace sr::eval

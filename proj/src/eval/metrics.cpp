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

#include "sr/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>

#include "sr/common/error.hpp"
#include "sr/common/rng.hpp"
#include "sr/kernels/kernels.hpp"

namespace sr::eval {

RocResult roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error("scores and labels differ in length");
  const size_t n = scores.size();
  size_t pos = 0;
  for (int l : labels) pos += l != 0;
  const size_t neg = n - pos;
  if (pos == 0 || neg == 0) throw Error("roc_auc needs both classes");

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // Average ranks over tie groups (1-based).
  double pos_rank_sum = 0.0;
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (size_t k = i; k < j; ++k) {
      if (labels[order[k]] != 0) pos_rank_sum += avg;
    }
    i = j;
  }
  RocResult r;
  const double p = static_cast<double>(pos);
  r.auc = (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));

  // Curve: sweep thresholds from high to low.
  r.curve.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  size_t tp = 0;
  size_t fp = 0;
  for (size_t i = n; i > 0;) {
    size_t j = i;
    const double s = scores[order[i - 1]];
    while (j > 0 && scores[order[j - 1]] == s) {
      --j;
      if (labels[order[j]] != 0) {
        ++tp;
      } else {
        ++fp;
      }
    }
    r.curve.push_back({s, static_cast<double>(fp) / neg, static_cast<double>(tp) / pos});
    i = j;
  }
  return r;
}

PhrasePairSet build_similarity_set(const std::map<std::string, int>& ground_truth, uint64_t seed,
                                   size_t max_positives) {
  std::map<int, std::vector<std::string>> by_intent;
  for (const auto& [phrase, intent] : ground_truth) by_intent[intent].push_back(phrase);
  Rng rng(seed);
  PhrasePairSet positives;
  for (const auto& [intent, phrases] : by_intent) {
    for (size_t i = 0; i < phrases.size(); ++i) {
      for (size_t j = i + 1; j < phrases.size(); ++j) positives.push_back({phrases[i], phrases[j], true});
    }
  }
  if (max_positives > 0 && positives.size() > max_positives) {
    rng.shuffle(positives);
    positives.resize(max_positives);
  }
  PhrasePairSet out = positives;
  std::vector<std::pair<std::string, int>> all(ground_truth.begin(), ground_truth.end());
  if (by_intent.size() >= 2) {
    const size_t want = (positives.size() * 3 + 2) / 4;
    std::set<std::pair<size_t, size_t>> seen;
    size_t guard = 0;
    while (out.size() - positives.size() < want && guard++ < want * 50) {
      size_t a = rng.below(all.size());
      size_t b = rng.below(all.size());
      if (all[a].second == all[b].second) continue;
      if (a > b) std::swap(a, b);
      if (!seen.emplace(a, b).second) continue;
      out.push_back({all[a].first, all[b].first, false});
    }
  }
  return out;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = std::sqrt(kernels::dot(a, a));
  const double nb = std::sqrt(kernels::dot(b, b));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return kernels::dot(a, b) / (na * nb);
}

RocResult phrase_similarity_auc(const PhrasePairSet& pairs, const embedder::Encoder& encoder) {
  std::unordered_map<std::string, int> index;
  std::vector<embedder::EncodedMessage> batch;
  for (const auto& p : pairs) {
    for (const std::string* s : {&p.a, &p.b}) {
      if (index.emplace(*s, static_cast<int>(batch.size())).second) batch.push_back(encoder.prepare(*s));
    }
  }
  const Mat e = encoder.embed_batch(batch);
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& p : pairs) {
    scores.push_back(cosine(e.row(index.at(p.a)), e.row(index.at(p.b))));
    labels.push_back(p.similar ? 1 : 0);
  }
  return roc_auc(scores, labels);
}

double adjusted_rand_index(const std::map<std::string, int>& a, const std::map<std::string, int>& b) {
  if (a.size() != b.size()) throw Error("partitions cover different phrase sets");
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows;
  std::map<int, double> cols;
  auto ib = b.begin();
  for (const auto& [phrase, la] : a) {
    if (ib->first != phrase) throw Error("partitions cover different phrase sets");
    table[{la, ib->second}] += 1.0;
    rows[la] += 1.0;
    cols[ib->second] += 1.0;
    ++ib;
  }
  auto c2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0.0;
  for (const auto& [k, v] : table) index += c2(v);
  double sa = 0.0;
  double sb = 0.0;
  for (const auto& [k, v] : rows) sa += c2(v);
  for (const auto& [k, v] : cols) sb += c2(v);
  const double total = c2(static_cast<double>(a.size()));
  if (total == 0.0) return 1.0;
  const double expected = sa * sb / total;
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace sr::eval

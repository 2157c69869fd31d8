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

#include "sr/clusterer/cluster_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "sr/clusterer/hdbscan.hpp"
#include "sr/common/error.hpp"
#include "sr/kernels/kernels.hpp"

namespace sr::clusterer {

void ClusterConfig::validate() const {
  if (min_cluster_size < 2) throw ConfigError("min_cluster_size must be >= 2");
  if (top_phrases < 1) throw ConfigError("top_phrases must be >= 1");
}

std::vector<PhraseFreq> count_phrases(const std::vector<corpus::Conversation>& conversations, size_t top_phrases,
                                      int max_words) {
  std::unordered_map<std::string, uint64_t> counts;
  for (const auto& conv : conversations) {
    for (const auto& m : conv) {
      if (m.tokens.empty() || m.sticker_only() || m.words() > max_words) continue;
      ++counts[m.phrase()];
    }
  }
  std::vector<PhraseFreq> out;
  out.reserve(counts.size());
  for (auto& [p, c] : counts) out.push_back({p, c});
  std::sort(out.begin(), out.end(), [](const PhraseFreq& a, const PhraseFreq& b) {
    return a.freq != b.freq ? a.freq > b.freq : a.phrase < b.phrase;
  });
  if (out.size() > top_phrases) out.resize(top_phrases);
  return out;
}

Mat l2_normalize_rows(Mat m) {
  for (int i = 0; i < m.rows; ++i) {
    auto r = m.row(i);
    const double n = std::sqrt(kernels::dot(r, r));
    if (n > 0.0) {
      for (auto& x : r) x /= n;
    }
  }
  return m;
}

ClusterModel model_from_labels(const std::vector<PhraseFreq>& phrases, const std::vector<int>& labels) {
  if (phrases.size() != labels.size()) throw Error("one label per phrase required");
  ClusterModel model;
  std::map<int, int> dense;
  for (size_t i = 0; i < phrases.size(); ++i) {
    int id;
    if (labels[i] < 0) {
      id = model.num_clusters();
      model.cluster_phrases.emplace_back();
    } else {
      const auto [it, inserted] = dense.emplace(labels[i], model.num_clusters());
      if (inserted) model.cluster_phrases.emplace_back();
      id = it->second;
    }
    if (!model.assignment.emplace(phrases[i].phrase, id).second) {
      throw Error("duplicate phrase: " + phrases[i].phrase);
    }
    model.cluster_phrases[id].push_back(phrases[i]);
  }
  return model;
}

ClusterModel cluster(const std::vector<PhraseFreq>& phrases, const Mat& embeddings, const ClusterConfig& config) {
  config.validate();
  if (embeddings.rows != static_cast<int>(phrases.size())) throw Error("one embedding per phrase required");
  const Mat unit = l2_normalize_rows(embeddings);
  return model_from_labels(phrases, hdbscan(unit, config.min_cluster_size));
}

ClusterModel cluster(const std::vector<PhraseFreq>& phrases, const embedder::Encoder& encoder,
                     const ClusterConfig& config) {
  std::vector<embedder::EncodedMessage> batch;
  batch.reserve(phrases.size());
  for (const auto& p : phrases) batch.push_back(encoder.prepare(p.phrase));
  return cluster(phrases, encoder.embed_batch(batch), config);
}

std::vector<ClassRow> export_classes(const ClusterModel& model, size_t g_cap) {
  std::vector<std::pair<uint64_t, int>> totals;
  for (int g = 0; g < model.num_clusters(); ++g) {
    uint64_t s = 0;
    for (const auto& p : model.cluster_phrases[g]) s += p.freq;
    totals.emplace_back(s, g);
  }
  std::sort(totals.begin(), totals.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  if (totals.size() > g_cap) totals.resize(g_cap);
  std::vector<ClassRow> rows;
  for (size_t rank = 0; rank < totals.size(); ++rank) {
    for (const auto& p : model.cluster_phrases[totals[rank].second]) {
      rows.push_back({p.phrase, static_cast<int>(rank), p.freq});
    }
  }
  std::sort(rows.begin(), rows.end(), [](const ClassRow& a, const ClassRow& b) {
    if (a.cluster_id != b.cluster_id) return a.cluster_id < b.cluster_id;
    if (a.freq != b.freq) return a.freq > b.freq;
    return a.phrase < b.phrase;
  });
  return rows;
}

int num_classes(const std::vector<ClassRow>& rows) {
  int g = 0;
  for (const auto& r : rows) g = std::max(g, r.cluster_id + 1);
  return g;
}

void write_cluster_table(const std::string& path, const std::vector<ClassRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (const auto& r : rows) out << r.phrase << '\t' << r.cluster_id << '\t' << r.freq << '\n';
}

std::vector<ClassRow> read_cluster_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<ClassRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const size_t t1 = line.find('\t');
    const size_t t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw FormatError(FormatError::Code::kCorrupt, path + ":" + std::to_string(lineno) + ": expected 3 fields");
    }
    try {
      rows.push_back({line.substr(0, t1), std::stoi(line.substr(t1 + 1, t2 - t1 - 1)),
                      std::stoull(line.substr(t2 + 1))});
    } catch (const std::exception&) {
      throw FormatError(FormatError::Code::kCorrupt, path + ":" + std::to_string(lineno) + ": bad number");
    }
  }
  return rows;
}

std::string describe_clusters(const std::vector<ClassRow>& rows, size_t max_clusters, size_t max_phrases) {
  std::ostringstream out;
  int current = -1;
  size_t shown = 0;
  size_t clusters = 0;
  for (const auto& r : rows) {
    if (r.cluster_id != current) {
      if (clusters == max_clusters) break;
      current = r.cluster_id;
      shown = 0;
      ++clusters;
      out << (clusters > 1 ? "\n" : "") << "cluster " << current << ":";
    }
    if (shown++ < max_phrases) out << "\n  " << r.phrase << " (" << r.freq << ")";
  }
  out << '\n';
  return out.str();
}

}  // namespace sr::clusterer

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
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace sr::eval {

// Ranked cluster ids for a previous message and the text typed so far.
using RankFn = std::function<std::vector<int>(const std::string& prev, const std::string& typed)>;

struct TypingCase {
  std::string prev;
  std::string next;  // normalized phrase; its prefixes are fed as typed text
};

struct TypingMetrics {
  std::string model_name;
  // Means over retrieved messages only.
  double chars_to_type = 0.0;
  double inaccurate_shown = 0.0;
  double fraction_retrieved = 0.0;
  size_t n = 0;         // evaluated messages
  size_t retrieved = 0;
  size_t excluded = 0;  // next phrase missing from the cluster table
};

struct TypingOutcome {
  bool retrieved = false;
  int chars = 0;       // prefix length (code points) at first retrieval
  int inaccurate = 0;  // nonempty top-k lists shown before that, none holding the truth
};

// Feeds prefixes of length 0, 1, ... (in code points) up to the full message
// and stops at the first one whose top-k holds true_cluster.
TypingOutcome simulate_one(const RankFn& model, const std::string& prev, const std::string& next, int true_cluster,
                           int k = 3);

TypingMetrics simulate_typing(const RankFn& model, const std::vector<TypingCase>& cases,
                              const std::map<std::string, int>& cluster_of, int k = 3,
                              std::string model_name = "");

nlohmann::json to_json(const TypingMetrics& m);
TypingMetrics typing_metrics_from_json(const nlohmann::json& j);

// Side-by-side table, one column per model.
std::string render_table(const std::vector<TypingMetrics>& models);

}  // namespace sr::eval

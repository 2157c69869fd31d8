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

#include "sr/eval/typing.hpp"

#include <algorithm>
#include <cstdio>

namespace sr::eval {

namespace {

// Byte offsets of every code point boundary, including 0 and size().
std::vector<size_t> code_point_boundaries(std::string_view s) {
  std::vector<size_t> out{0};
  for (size_t i = 1; i <= s.size(); ++i) {
    if (i == s.size() || (static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) out.push_back(i);
  }
  return out;
}

}  // namespace

TypingOutcome simulate_one(const RankFn& model, const std::string& prev, const std::string& next, int true_cluster,
                           int k) {
  TypingOutcome out;
  const std::vector<size_t> cuts = code_point_boundaries(next);
  for (size_t len = 0; len < cuts.size(); ++len) {
    std::vector<int> ranked = model(prev, next.substr(0, cuts[len]));
    if (static_cast<int>(ranked.size()) > k) ranked.resize(k);
    if (std::find(ranked.begin(), ranked.end(), true_cluster) != ranked.end()) {
      out.retrieved = true;
      out.chars = static_cast<int>(len);
      return out;
    }
    if (!ranked.empty()) ++out.inaccurate;
  }
  return out;
}

TypingMetrics simulate_typing(const RankFn& model, const std::vector<TypingCase>& cases,
                              const std::map<std::string, int>& cluster_of, int k, std::string model_name) {
  TypingMetrics m;
  m.model_name = std::move(model_name);
  double chars = 0.0;
  double inaccurate = 0.0;
  for (const auto& c : cases) {
    const auto it = cluster_of.find(c.next);
    if (it == cluster_of.end()) {
      ++m.excluded;
      continue;
    }
    ++m.n;
    const TypingOutcome o = simulate_one(model, c.prev, c.next, it->second, k);
    if (!o.retrieved) continue;
    ++m.retrieved;
    chars += o.chars;
    inaccurate += o.inaccurate;
  }
  if (m.retrieved > 0) {
    m.chars_to_type = chars / static_cast<double>(m.retrieved);
    m.inaccurate_shown = inaccurate / static_cast<double>(m.retrieved);
  }
  if (m.n > 0) m.fraction_retrieved = static_cast<double>(m.retrieved) / static_cast<double>(m.n);
  return m;
}

nlohmann::json to_json(const TypingMetrics& m) {
  return {{"model_name", m.model_name},
          {"chars_to_type", m.chars_to_type},
          {"inaccurate_shown", m.inaccurate_shown},
          {"fraction_retrieved", m.fraction_retrieved},
          {"n", m.n},
          {"retrieved", m.retrieved},
          {"excluded", m.excluded}};
}

TypingMetrics typing_metrics_from_json(const nlohmann::json& j) {
  TypingMetrics m;
  m.model_name = j.value("model_name", "");
  m.chars_to_type = j.at("chars_to_type").get<double>();
  m.inaccurate_shown = j.at("inaccurate_shown").get<double>();
  m.fraction_retrieved = j.at("fraction_retrieved").get<double>();
  m.n = j.at("n").get<size_t>();
  m.retrieved = j.value("retrieved", size_t{0});
  m.excluded = j.value("excluded", size_t{0});
  return m;
}

std::string render_table(const std::vector<TypingMetrics>& models) {
  const char* rows[] = {"# of characters to type", "# of inaccurate predictions shown", "fraction retrieved",
                        "messages (excluded)"};
  size_t label_w = 0;
  for (const char* r : rows) label_w = std::max(label_w, std::string_view(r).size());
  std::vector<std::vector<std::string>> cells(models.size());
  std::vector<size_t> widths;
  char buf[64];
  for (size_t i = 0; i < models.size(); ++i) {
    const auto& m = models[i];
    cells[i].push_back(m.model_name.empty() ? "model " + std::to_string(i + 1) : m.model_name);
    std::snprintf(buf, sizeof buf, "%.3f", m.chars_to_type);
    cells[i].push_back(buf);
    std::snprintf(buf, sizeof buf, "%.3f", m.inaccurate_shown);
    cells[i].push_back(buf);
    std::snprintf(buf, sizeof buf, "%.3f", m.fraction_retrieved);
    cells[i].push_back(buf);
    cells[i].push_back(std::to_string(m.n) + " (" + std::to_string(m.excluded) + ")");
    size_t w = 0;
    for (const auto& c : cells[i]) w = std::max(w, c.size());
    widths.push_back(w);
  }
  std::string out;
  for (size_t r = 0; r < 5; ++r) {
    std::string line = r == 0 ? std::string() : rows[r - 1];
    line.resize(label_w, ' ');
    for (size_t i = 0; i < models.size(); ++i) {
      std::string c = cells[i][r];
      line += "  " + std::string(widths[i] - c.size(), ' ') + c;
    }
    out += line + "\n";
  }
  return out;
}

}  // namespace sr::eval

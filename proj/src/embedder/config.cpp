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

#include "sr/embedder/config.hpp"

#include <numeric>

#include "sr/common/error.hpp"

namespace sr::embedder {

std::string_view kind_name(EncoderKind kind) {
  return kind == EncoderKind::kGru ? "gru" : "transformer";
}

EncoderKind parse_kind(std::string_view name) {
  if (name == "gru") return EncoderKind::kGru;
  if (name == "transformer") return EncoderKind::kTransformer;
  throw ConfigError("unknown encoder kind: " + std::string(name));
}

int EncoderConfig::d_c_out() const {
  return charcnn ? std::accumulate(filter_counts.begin(), filter_counts.end(), 0) : 0;
}

int EncoderConfig::word_dim() const { return d_w + d_c_out(); }

void EncoderConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("encoder config: " + what); };
  if (d_w < 1) fail("d_w must be >= 1");
  if (d_out < 1) fail("d_out must be >= 1");
  if (max_word_chars < 1) fail("max_word_chars must be >= 1");
  if (charcnn) {
    if (d_c_in < 1) fail("d_c_in must be >= 1");
    if (filter_widths.empty()) fail("filter_widths must be nonempty");
    if (filter_widths.size() != filter_counts.size()) fail("filter_widths and filter_counts differ in length");
    for (size_t i = 0; i < filter_widths.size(); ++i) {
      if (filter_widths[i] < 1 || filter_widths[i] > max_word_chars) {
        fail("filter width out of range [1, max_word_chars]");
      }
      if (filter_counts[i] < 1) fail("filter counts must be >= 1");
    }
  }
  if (gru_dropout < 0.0 || gru_dropout >= 1.0) fail("gru_dropout must be in [0, 1)");
  if (kind == EncoderKind::kTransformer) {
    const auto& t = transformer;
    if (t.layers < 1 || t.heads < 1 || t.model_dim < 1 || t.inner_dim < 1) fail("transformer dims must be >= 1");
    if (t.model_dim % t.heads != 0) fail("heads must divide model_dim");
    if (t.dropout < 0.0 || t.dropout >= 1.0) fail("transformer dropout must be in [0, 1)");
    if (d_out != t.model_dim) fail("transformer d_out must equal model_dim");
  }
}

EncoderConfig EncoderConfig::large_gru() {
  EncoderConfig c;
  c.kind = EncoderKind::kGru;
  c.d_out = 300;
  return c;
}

EncoderConfig EncoderConfig::large_transformer() {
  EncoderConfig c;
  c.kind = EncoderKind::kTransformer;
  c.d_out = c.transformer.model_dim;
  return c;
}

EncoderConfig EncoderConfig::desk(EncoderKind kind, bool charcnn) {
  EncoderConfig c;
  c.kind = kind;
  c.charcnn = charcnn;
  c.d_w = 32;
  c.d_c_in = 16;
  c.filter_counts = {8, 8, 12, 12};
  c.transformer = TransformerConfig{2, 4, 48, 96, 0.1, true};
  c.d_out = kind == EncoderKind::kGru ? 48 : c.transformer.model_dim;
  return c;
}

nlohmann::json to_json(const EncoderConfig& c) {
  return {
      {"d_w", c.d_w},
      {"d_c_in", c.d_c_in},
      {"filter_widths", c.filter_widths},
      {"filter_counts", c.filter_counts},
      {"charcnn", c.charcnn},
      {"encoder_kind", kind_name(c.kind)},
      {"d_out", c.d_out},
      {"max_word_chars", c.max_word_chars},
      {"gru_dropout", c.gru_dropout},
      {"transformer",
       {{"layers", c.transformer.layers},
        {"heads", c.transformer.heads},
        {"model_dim", c.transformer.model_dim},
        {"inner_dim", c.transformer.inner_dim},
        {"dropout", c.transformer.dropout},
        {"positional", c.transformer.positional}}},
  };
}

EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  try {
    c.d_w = j.value("d_w", c.d_w);
    c.d_c_in = j.value("d_c_in", c.d_c_in);
    c.filter_widths = j.value("filter_widths", c.filter_widths);
    c.filter_counts = j.value("filter_counts", c.filter_counts);
    c.charcnn = j.value("charcnn", c.charcnn);
    c.kind = parse_kind(j.value("encoder_kind", std::string(kind_name(c.kind))));
    c.d_out = j.value("d_out", c.d_out);
    c.max_word_chars = j.value("max_word_chars", c.max_word_chars);
    c.gru_dropout = j.value("gru_dropout", c.gru_dropout);
    if (j.contains("transformer")) {
      const auto& t = j.at("transformer");
      c.transformer.layers = t.value("layers", c.transformer.layers);
      c.transformer.heads = t.value("heads", c.transformer.heads);
      c.transformer.model_dim = t.value("model_dim", c.transformer.model_dim);
      c.transformer.inner_dim = t.value("inner_dim", c.transformer.inner_dim);
      c.transformer.dropout = t.value("dropout", c.transformer.dropout);
      c.transformer.positional = t.value("positional", c.transformer.positional);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("encoder config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace sr::embedder

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

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace sr::embedder {

enum class EncoderKind { kGru, kTransformer };

std::string_view kind_name(EncoderKind kind);
EncoderKind parse_kind(std::string_view name);

struct TransformerConfig {
  int layers = 2;
  int heads = 8;
  int model_dim = 256;
  int inner_dim = 512;
  double dropout = 0.1;
  bool positional = true;  // fixed sinusoidal encodings
};

struct EncoderConfig {
  int d_w = 300;
  int d_c_in = 16;
  std::vector<int> filter_widths{1, 2, 3, 4};
  std::vector<int> filter_counts{50, 50, 75, 75};
  // Off removes the character branch entirely (word embeddings only).
  bool charcnn = true;
  EncoderKind kind = EncoderKind::kGru;
  int d_out = 300;
  TransformerConfig transformer;
  int max_word_chars = 10;
  // GRU output dropout (training only).
  double gru_dropout = 0.1;

  int d_c_out() const;
  // Width of the per-word vector fed to the sequence encoder.
  int word_dim() const;

  // Throws ConfigError naming the first violated constraint.
  void validate() const;

  // Full-size hyperparameters for each encoder kind.
  static EncoderConfig large_gru();
  static EncoderConfig large_transformer();
  // Small configuration sized for single-core desk training runs.
  static EncoderConfig desk(EncoderKind kind, bool charcnn);
};

nlohmann::json to_json(const EncoderConfig& config);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);

}  // namespace sr::embedder

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

// Small shared fixtures for unit tests.

#include <string>
#include <vector>

#include "sr/corpus/corpus.hpp"
#include "sr/embedder/config.hpp"

namespace sr::testing {

inline corpus::Vocab tiny_vocab(const std::vector<std::string>& lines) {
  std::vector<corpus::MessagePair> pairs;
  for (size_t i = 0; i + 1 < lines.size(); i += 2) {
    pairs.push_back({corpus::make_message(lines[i]), corpus::make_message(lines[i + 1])});
  }
  return corpus::build_vocab(pairs, 1000);
}

inline corpus::Vocab default_tiny_vocab() {
  return tiny_vocab({"hi there", "hello you", "good night", "gud n8", "where are you", "whr r u", "ab ba", "ok :)"});
}

// A few-parameter encoder configuration for exact and gradient checks.
inline embedder::EncoderConfig tiny_config(embedder::EncoderKind kind, bool charcnn = true) {
  embedder::EncoderConfig c;
  c.kind = kind;
  c.charcnn = charcnn;
  c.d_w = 3;
  c.d_c_in = 2;
  c.filter_widths = {1, 2};
  c.filter_counts = {2, 2};
  c.max_word_chars = 4;
  c.d_out = 4;
  c.transformer.layers = 1;
  c.transformer.heads = 2;
  c.transformer.model_dim = 4;
  c.transformer.inner_dim = 6;
  return c;
}

}  // namespace sr::testing

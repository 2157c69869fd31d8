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
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sr/common/matrix.hpp"
#include "sr/corpus/corpus.hpp"
#include "sr/embedder/config.hpp"
#include "sr/nn/checkpoint.hpp"
#include "sr/nn/parameters.hpp"
#include "sr/nn/tape.hpp"

namespace sr::embedder {

// A message mapped to vocabulary ids. char_ids holds max_word_chars entries
// per word: the word's bytes truncated, then padded with the pad id.
struct EncodedMessage {
  std::vector<int> word_ids;
  std::vector<int> char_ids;

  int length() const { return static_cast<int>(word_ids.size()); }
};

// Called at named points of the forward pass; may rewrite the activation in
// place. Used for range calibration and fake quantization.
using ActivationHook = std::function<void(std::string_view site, Mat& activation)>;

// Message encoder: per-word CharCNN features concatenated with word
// embeddings, followed by a GRU (final state) or a Transformer encoder (mean
// of final-layer vectors).
class Encoder {
 public:
  Encoder(EncoderConfig config, corpus::Vocab vocab, uint64_t seed);

  const EncoderConfig& config() const { return config_; }
  const corpus::Vocab& vocab() const { return vocab_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }

  EncodedMessage prepare(const std::vector<corpus::Token>& tokens) const;
  // Normalizes and tokenizes raw text first.
  EncodedMessage prepare(std::string_view text) const;

  // Per-word vectors of every message stacked in order (sum of lengths rows,
  // word_dim columns).
  nn::Var word_vectors(nn::Tape& tape, std::span<const EncodedMessage> batch) const;
  // CharCNN features for n_words words given their char ids.
  nn::Var char_features(nn::Tape& tape, std::span<const int> char_ids, int n_words) const;
  // Message embeddings, one row per message (B x d_out). Throws on an empty
  // message.
  nn::Var forward(nn::Tape& tape, std::span<const EncodedMessage> batch) const;

  // Inference-mode embeddings, computed in chunks.
  Mat embed_batch(std::span<const EncodedMessage> batch) const;
  std::vector<double> embed(std::string_view text) const;

  // Attention weights of one layer for a single message, one L x L matrix per
  // head. Transformer only.
  std::vector<Mat> attention_weights(const EncodedMessage& message, int layer) const;

  void set_activation_hook(ActivationHook hook) { hook_ = std::move(hook); }
  const ActivationHook& activation_hook() const { return hook_; }
  nn::Var activation(nn::Tape& tape, nn::Var x, std::string_view site) const;

  // Metadata (kind, config, vocab fingerprint) plus every encoder tensor.
  nn::Checkpoint to_checkpoint() const;
  // Rebuilds the encoder; the vocab must match the recorded fingerprint.
  static Encoder from_checkpoint(const nn::Checkpoint& ckpt, corpus::Vocab vocab);

  void save(const std::string& path) const;
  static Encoder load(const std::string& checkpoint_path, const std::string& vocab_path);

 private:
  nn::Var encode_gru(nn::Tape& tape, nn::Var words, const std::vector<int>& lengths) const;
  nn::Var encode_transformer(nn::Tape& tape, nn::Var words, const std::vector<int>& lengths,
                             std::vector<Mat>* probs, int probs_layer) const;

  EncoderConfig config_;
  corpus::Vocab vocab_;
  nn::ParameterStore params_;
  ActivationHook hook_;
};

uint64_t vocab_fingerprint(const corpus::Vocab& vocab);

// Fixed sinusoidal position encodings, positions x dim.
Mat sinusoidal_positions(int positions, int dim);

}  // namespace sr::embedder

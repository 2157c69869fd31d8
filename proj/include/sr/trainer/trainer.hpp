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
#include <utility>
#include <vector>

#include "sr/common/matrix.hpp"
#include "sr/corpus/corpus.hpp"
#include "sr/embedder/encoder.hpp"
#include "sr/nn/optimizer.hpp"

namespace sr::trainer {

struct TrainConfig {
  int batch_size = 64;
  nn::OptimizerKind optimizer = nn::OptimizerKind::kAdam;
  double learning_rate = 1e-4;
  long decay_steps = 10000;  // 0 disables decay
  double decay_rate = 0.95;
  double grad_clip_value = 5.0;
  int epochs = 1;
  // Stops after this many optimizer steps when > 0.
  long max_steps = 0;
  uint64_t seed = 1;
  // Dropout between the two reply projection layers.
  double fc_dropout = 0.1;

  // Adam with step decay for GRU encoders, constant-rate RMSprop for
  // Transformer encoders.
  static TrainConfig for_kind(embedder::EncoderKind kind);
  void validate() const;
};

// Tied dual encoder: one Encoder embeds both the message and its reply; the
// reply side is then mapped through a 2-layer projection (ReLU between).
class DualEncoder {
 public:
  DualEncoder(embedder::Encoder encoder, uint64_t seed);

  embedder::Encoder& encoder() { return encoder_; }
  const embedder::Encoder& encoder() const { return encoder_; }
  nn::ParameterStore& projection() { return projection_; }
  const nn::ParameterStore& projection() const { return projection_; }
  std::vector<nn::Parameter*> parameters() const;
  void zero_grad();

  nn::Var project_reply(nn::Tape& tape, nn::Var e, double dropout) const;
  // B x B matrix of dot(e_i, e'_j).
  nn::Var score_matrix(nn::Tape& tape, std::span<const embedder::EncodedMessage> current,
                       std::span<const embedder::EncodedMessage> next, double fc_dropout = 0.0) const;
  nn::Var loss(nn::Tape& tape, std::span<const embedder::EncodedMessage> current,
               std::span<const embedder::EncodedMessage> next, double fc_dropout = 0.0) const;

  nn::Checkpoint to_checkpoint() const;
  static DualEncoder from_checkpoint(const nn::Checkpoint& ckpt, corpus::Vocab vocab);

 private:
  embedder::Encoder encoder_;
  nn::ParameterStore projection_;
};

// Plain-matrix forms of the scoring and loss, used for evaluation.
Mat batch_score_matrix(const Mat& embeddings, const Mat& reply_embeddings);
double batch_loss(const Mat& scores);

// One forward/backward pass. Gradients accumulate into Parameter::grad. When
// training, dropout masks are drawn from an Rng seeded with dropout_seed.
double compute_gradients(const DualEncoder& model, std::span<const embedder::EncodedMessage> current,
                         std::span<const embedder::EncodedMessage> next, bool training, double fc_dropout,
                         uint64_t dropout_seed);
double evaluate_loss(const DualEncoder& model, std::span<const embedder::EncodedMessage> current,
                     std::span<const embedder::EncodedMessage> next, bool training, double fc_dropout,
                     uint64_t dropout_seed);

// Fraction of rows whose argmax is the diagonal, in inference mode.
double batch_accuracy(const DualEncoder& model, std::span<const embedder::EncodedMessage> current,
                      std::span<const embedder::EncodedMessage> next);

struct TrainResult {
  std::vector<std::pair<long, double>> loss_curve;  // (step, batch loss)
  long steps = 0;
  double final_loss = 0.0;
};

using ProgressFn = std::function<void(long step, double loss)>;

// Mini-batch training with in-batch negatives. Throws "empty pair set" on no
// data and "diverged" on a non-finite loss.
TrainResult fit(DualEncoder& model, const std::vector<corpus::MessagePair>& pairs, const TrainConfig& config,
                const ProgressFn& progress = {});

void write_loss_csv(const std::string& path, const TrainResult& result);

}  // namespace sr::trainer

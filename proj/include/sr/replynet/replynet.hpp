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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sr/common/cluster_score.hpp"
#include "sr/common/matrix.hpp"
#include "sr/embedder/encoder.hpp"
#include "sr/nn/checkpoint.hpp"
#include "sr/nn/parameters.hpp"
#include "sr/replynet/quantize.hpp"

namespace sr::replynet {

inline constexpr double kDefaultReplyThreshold = 0.1;

// Clusters scoring strictly above t, by descending score then ascending id.
std::vector<ClusterScore> top_clusters(std::span<const double> p_reply, double t_reply);

enum class NetKind { kReply, kFull };
const char* net_kind_name(NetKind kind);

struct ReplyOutput {
  std::vector<double> probs;
  // Set when the input was empty and probs is the uniform fallback.
  bool degenerate = false;
};

struct HeadTrainConfig {
  int epochs = 20;
  int batch_size = 128;
  double learning_rate = 1e-2;
  uint64_t seed = 1;

  void validate() const;
};

// One training example. typed is ignored by reply nets.
struct ClusterExample {
  std::string prev;
  std::string typed;
  int cluster = 0;
};

// Sigmoid classifier over G message clusters on top of a shared encoder. A
// reply net reads the previous message only; a full net reads the previous
// message and the typed text, concatenated in that order, with learned
// sentinel vectors standing in for an empty side.
class ClusterNet {
 public:
  ClusterNet(NetKind kind, embedder::Encoder encoder, int num_classes, uint64_t seed);

  NetKind kind() const { return kind_; }
  int num_classes() const { return num_classes_; }
  int input_dim() const;
  double t_reply() const { return t_reply_; }
  void set_t_reply(double t);
  bool quantized() const { return quantized_; }

  const embedder::Encoder& encoder() const { return encoder_; }
  embedder::Encoder& encoder() { return encoder_; }
  nn::ParameterStore& head() { return head_; }
  const nn::ParameterStore& head() const { return head_; }

  ReplyOutput predict_reply(std::string_view prev) const;
  std::vector<double> predict_full(std::string_view prev, std::string_view typed) const;
  // Probabilities, one row per input. Reply nets map empty prev rows to the
  // uniform fallback; full nets reject rows where both sides are empty.
  Mat predict_batch(std::span<const std::string> prev, std::span<const std::string> typed) const;

  // Trains the head (and sentinels) on frozen encoder embeddings with
  // per-class binary cross-entropy. Returns the mean loss of each epoch.
  std::vector<double> fit(const std::vector<ClusterExample>& examples, const HeadTrainConfig& config);

  // Records activation ranges over the given inputs.
  ActivationRanges calibrate(std::span<const std::string> prev, std::span<const std::string> typed);

  nn::Checkpoint to_checkpoint() const;
  // Accepts float and quantized checkpoints; quantized ones enable fake-quant
  // inference with the recorded activation ranges.
  static ClusterNet from_checkpoint(const nn::Checkpoint& ckpt, corpus::Vocab vocab);
  void save(const std::string& path) const;
  static ClusterNet load(const std::string& checkpoint_path, const std::string& vocab_path);

 private:
  // Embeddings for texts; rows of empty texts are zero and marked absent.
  Mat embed_texts(std::span<const std::string> texts, std::vector<bool>& present) const;
  Mat assemble_inputs(std::span<const std::string> prev, std::span<const std::string> typed,
                      std::vector<bool>& usable) const;
  Mat head_probs(const Mat& x) const;

  NetKind kind_;
  embedder::Encoder encoder_;
  int num_classes_;
  double t_reply_ = kDefaultReplyThreshold;
  nn::ParameterStore head_;
  bool quantized_ = false;
};

// Fraction of inputs whose float and quantized top-k sets overlap, averaged
// as |A ∩ B| / k.
double top_k_overlap(const Mat& a, const Mat& b, int k);

}  // namespace sr::replynet

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

#include "sr/trainer/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "sr/common/error.hpp"
#include "sr/common/rng.hpp"
#include "sr/nn/tape.hpp"

namespace sr::trainer {

using embedder::EncodedMessage;

TrainConfig TrainConfig::for_kind(embedder::EncoderKind kind) {
  TrainConfig c;
  if (kind == embedder::EncoderKind::kTransformer) {
    c.optimizer = nn::OptimizerKind::kRmsprop;
    c.decay_steps = 0;
  }
  return c;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2 for in-batch negatives");
  if (!(grad_clip_value > 0.0)) throw ConfigError("grad_clip_value must be > 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (decay_steps < 0) throw ConfigError("decay_steps must be >= 0");
  if (fc_dropout < 0.0 || fc_dropout >= 1.0) throw ConfigError("fc_dropout must be in [0, 1)");
}

DualEncoder::DualEncoder(embedder::Encoder encoder, uint64_t seed) : encoder_(std::move(encoder)) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const int d = encoder_.config().d_out;
  nn::init_glorot(projection_.add("reply.w1", d, d).value, rng);
  projection_.add("reply.b1", 1, d);
  nn::init_glorot(projection_.add("reply.w2", d, d).value, rng);
  projection_.add("reply.b2", 1, d);
}

std::vector<nn::Parameter*> DualEncoder::parameters() const {
  std::vector<nn::Parameter*> out = encoder_.params().pointers();
  for (nn::Parameter* p : projection_.pointers()) out.push_back(p);
  return out;
}

void DualEncoder::zero_grad() {
  encoder_.params().zero_grad();
  projection_.zero_grad();
}

nn::Var DualEncoder::project_reply(nn::Tape& tape, nn::Var e, double dropout) const {
  nn::Var h = tape.add_row(tape.matmul(e, tape.param(projection_.at("reply.w1"))),
                           tape.param(projection_.at("reply.b1")));
  h = tape.dropout(tape.relu(h), dropout);
  return tape.add_row(tape.matmul(h, tape.param(projection_.at("reply.w2"))),
                      tape.param(projection_.at("reply.b2")));
}

nn::Var DualEncoder::score_matrix(nn::Tape& tape, std::span<const EncodedMessage> current,
                                  std::span<const EncodedMessage> next, double fc_dropout) const {
  if (current.size() != next.size()) throw Error("batch sides differ in size");
  if (current.size() < 2) throw ConfigError("batch_size must be >= 2 for in-batch negatives");
  const nn::Var e = encoder_.forward(tape, current);
  const nn::Var r = project_reply(tape, encoder_.forward(tape, next), fc_dropout);
  return tape.matmul_nt(e, r);
}

nn::Var DualEncoder::loss(nn::Tape& tape, std::span<const EncodedMessage> current,
                          std::span<const EncodedMessage> next, double fc_dropout) const {
  return tape.softmax_xent_diagonal(score_matrix(tape, current, next, fc_dropout));
}

nn::Checkpoint DualEncoder::to_checkpoint() const {
  nn::Checkpoint ckpt = encoder_.to_checkpoint();
  ckpt.meta["kind"] = "dual_encoder";
  nn::append_parameters(ckpt, projection_);
  return ckpt;
}

DualEncoder DualEncoder::from_checkpoint(const nn::Checkpoint& ckpt, corpus::Vocab vocab) {
  DualEncoder model(embedder::Encoder::from_checkpoint(ckpt, std::move(vocab)), 0);
  nn::restore_parameters(ckpt, model.projection_);
  return model;
}

Mat batch_score_matrix(const Mat& embeddings, const Mat& reply_embeddings) {
  if (embeddings.rows < 2) throw ConfigError("batch_size must be >= 2 for in-batch negatives");
  if (!embeddings.same_shape(reply_embeddings)) throw Error("score matrix inputs differ in shape");
  nn::Tape tape(false, nullptr, false);
  return tape.value(tape.matmul_nt(tape.constant(embeddings), tape.constant(reply_embeddings)));
}

double batch_loss(const Mat& scores) {
  if (scores.rows != scores.cols) throw Error("score matrix must be square");
  nn::Tape tape(false, nullptr, false);
  return tape.scalar(tape.softmax_xent_diagonal(tape.constant(scores)));
}

double compute_gradients(const DualEncoder& model, std::span<const EncodedMessage> current,
                         std::span<const EncodedMessage> next, bool training, double fc_dropout,
                         uint64_t dropout_seed) {
  Rng rng(dropout_seed);
  nn::Tape tape(training, &rng, true);
  const nn::Var loss = model.loss(tape, current, next, fc_dropout);
  const double value = tape.scalar(loss);
  if (!std::isfinite(value)) throw Error("diverged");
  tape.backward(loss);
  return value;
}

double evaluate_loss(const DualEncoder& model, std::span<const EncodedMessage> current,
                     std::span<const EncodedMessage> next, bool training, double fc_dropout,
                     uint64_t dropout_seed) {
  Rng rng(dropout_seed);
  nn::Tape tape(training, &rng, false);
  return tape.scalar(model.loss(tape, current, next, fc_dropout));
}

double batch_accuracy(const DualEncoder& model, std::span<const EncodedMessage> current,
                      std::span<const EncodedMessage> next) {
  nn::Tape tape(false, nullptr, false);
  const Mat& s = tape.value(model.score_matrix(tape, current, next));
  int hits = 0;
  for (int i = 0; i < s.rows; ++i) {
    int best = 0;
    for (int j = 1; j < s.cols; ++j) {
      if (s(i, j) > s(i, best)) best = j;
    }
    hits += best == i;
  }
  return static_cast<double>(hits) / s.rows;
}

TrainResult fit(DualEncoder& model, const std::vector<corpus::MessagePair>& pairs, const TrainConfig& config,
                const ProgressFn& progress) {
  config.validate();
  if (pairs.empty()) throw Error("empty pair set");
  if (pairs.size() < 2) throw ConfigError("need at least 2 pairs for in-batch negatives");

  std::vector<EncodedMessage> cur;
  std::vector<EncodedMessage> nxt;
  cur.reserve(pairs.size());
  nxt.reserve(pairs.size());
  for (const auto& p : pairs) {
    cur.push_back(model.encoder().prepare(p.current.tokens));
    nxt.push_back(model.encoder().prepare(p.next.tokens));
  }

  nn::OptimizerConfig oc;
  oc.kind = config.optimizer;
  oc.learning_rate = config.learning_rate;
  oc.clip_value = config.grad_clip_value;
  oc.decay_steps = config.decay_steps;
  oc.decay_rate = config.decay_rate;
  nn::Optimizer optimizer(oc);
  const std::vector<nn::Parameter*> params = model.parameters();

  Rng order_rng(config.seed);
  Rng dropout_rng(config.seed + 0x5851f42d4c957f2dULL);
  std::vector<size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  const size_t bs = std::min<size_t>(config.batch_size, pairs.size());

  TrainResult result;
  model.zero_grad();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(order);
    for (size_t begin = 0; begin + bs <= order.size(); begin += bs) {
      std::vector<EncodedMessage> bc;
      std::vector<EncodedMessage> bn;
      for (size_t i = begin; i < begin + bs; ++i) {
        bc.push_back(cur[order[i]]);
        bn.push_back(nxt[order[i]]);
      }
      const double loss = compute_gradients(model, bc, bn, true, config.fc_dropout, dropout_rng.next_u64());
      optimizer.step(params);
      ++result.steps;
      result.loss_curve.emplace_back(result.steps, loss);
      result.final_loss = loss;
      if (progress) progress(result.steps, loss);
      if (config.max_steps > 0 && result.steps >= config.max_steps) return result;
    }
  }
  return result;
}

void write_loss_csv(const std::string& path, const TrainResult& result) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "step,loss\n";
  out.precision(10);
  for (const auto& [step, loss] : result.loss_curve) out << step << ',' << loss << '\n';
}

}  // namespace sr::trainer

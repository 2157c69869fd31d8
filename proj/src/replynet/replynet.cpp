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

#include "sr/replynet/replynet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "sr/common/error.hpp"
#include "sr/common/rng.hpp"
#include "sr/corpus/corpus.hpp"
#include "sr/nn/optimizer.hpp"
#include "sr/nn/tape.hpp"

namespace sr::replynet {

using embedder::EncodedMessage;

std::vector<ClusterScore> top_clusters(std::span<const double> p_reply, double t_reply) {
  std::vector<ClusterScore> out;
  for (size_t g = 0; g < p_reply.size(); ++g) {
    if (p_reply[g] > t_reply) out.push_back({static_cast<int>(g), p_reply[g]});
  }
  std::sort(out.begin(), out.end(), [](const ClusterScore& a, const ClusterScore& b) {
    return a.score != b.score ? a.score > b.score : a.cluster_id < b.cluster_id;
  });
  return out;
}

const char* net_kind_name(NetKind kind) { return kind == NetKind::kReply ? "reply_net" : "full_net"; }

void HeadTrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
}

ClusterNet::ClusterNet(NetKind kind, embedder::Encoder encoder, int num_classes, uint64_t seed)
    : kind_(kind), encoder_(std::move(encoder)), num_classes_(num_classes) {
  if (num_classes < 2) throw ConfigError("need at least 2 clusters");
  Rng rng(seed);
  const int d = encoder_.config().d_out;
  nn::init_glorot(head_.add("head.w", input_dim(), num_classes).value, rng);
  head_.add("head.b", 1, num_classes);
  if (kind_ == NetKind::kFull) {
    nn::init_normal(head_.add("sentinel.prev", 1, d).value, rng, 0.1);
    nn::init_normal(head_.add("sentinel.typed", 1, d).value, rng, 0.1);
  }
}

int ClusterNet::input_dim() const {
  const int d = encoder_.config().d_out;
  return kind_ == NetKind::kReply ? d : 2 * d;
}

void ClusterNet::set_t_reply(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("t_reply must be in [0, 1]");
  t_reply_ = t;
}

Mat ClusterNet::embed_texts(std::span<const std::string> texts, std::vector<bool>& present) const {
  const int d = encoder_.config().d_out;
  std::vector<EncodedMessage> encoded;
  std::vector<int> rows;
  present.assign(texts.size(), false);
  for (size_t i = 0; i < texts.size(); ++i) {
    EncodedMessage m = encoder_.prepare(texts[i]);
    if (m.length() == 0) continue;
    present[i] = true;
    rows.push_back(static_cast<int>(i));
    encoded.push_back(std::move(m));
  }
  Mat out(static_cast<int>(texts.size()), d);
  if (encoded.empty()) return out;
  const Mat e = encoder_.embed_batch(encoded);
  for (size_t j = 0; j < rows.size(); ++j) std::copy_n(e.row(static_cast<int>(j)).begin(), d, out.row(rows[j]).begin());
  return out;
}

Mat ClusterNet::assemble_inputs(std::span<const std::string> prev, std::span<const std::string> typed,
                                std::vector<bool>& usable) const {
  const int n = static_cast<int>(prev.size());
  const int d = encoder_.config().d_out;
  std::vector<bool> has_prev;
  const Mat ep = embed_texts(prev, has_prev);
  if (kind_ == NetKind::kReply) {
    usable = has_prev;
    return ep;
  }
  if (typed.size() != prev.size()) throw Error("prev and typed batches differ in size");
  std::vector<bool> has_typed;
  const Mat et = embed_texts(typed, has_typed);
  const auto& sp = head_.at("sentinel.prev").value.data;
  const auto& st = head_.at("sentinel.typed").value.data;
  Mat x(n, 2 * d);
  usable.assign(n, true);
  for (int i = 0; i < n; ++i) {
    if (!has_prev[i] && !has_typed[i]) throw Error("both inputs empty");
    auto row = x.row(i);
    if (has_prev[i]) std::copy_n(ep.row(i).begin(), d, row.begin());
    else std::copy(sp.begin(), sp.end(), row.begin());
    if (has_typed[i]) std::copy_n(et.row(i).begin(), d, row.begin() + d);
    else std::copy(st.begin(), st.end(), row.begin() + d);
  }
  return x;
}

Mat ClusterNet::head_probs(const Mat& x) const {
  nn::Tape tape(false, nullptr, false);
  const nn::Var logits =
      tape.add_row(tape.matmul(tape.constant(x), tape.param(head_.at("head.w"))), tape.param(head_.at("head.b")));
  Mat z = tape.value(logits);
  if (const auto& hook = encoder_.activation_hook()) hook("head.logits", z);
  for (double& v : z.data) v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  return z;
}

Mat ClusterNet::predict_batch(std::span<const std::string> prev, std::span<const std::string> typed) const {
  std::vector<bool> usable;
  Mat x = assemble_inputs(prev, typed, usable);
  Mat p = head_probs(x);
  for (int i = 0; i < p.rows; ++i) {
    if (usable[i]) continue;
    std::fill(p.row(i).begin(), p.row(i).end(), 1.0 / num_classes_);
  }
  return p;
}

ReplyOutput ClusterNet::predict_reply(std::string_view prev) const {
  if (kind_ != NetKind::kReply) throw Error("predict_reply needs a reply net");
  ReplyOutput out;
  const std::string text(prev);
  if (encoder_.prepare(text).length() == 0) {
    out.probs.assign(num_classes_, 1.0 / num_classes_);
    out.degenerate = true;
    return out;
  }
  const Mat p = predict_batch(std::span(&text, 1), {});
  out.probs.assign(p.data.begin(), p.data.end());
  return out;
}

std::vector<double> ClusterNet::predict_full(std::string_view prev, std::string_view typed) const {
  if (kind_ != NetKind::kFull) throw Error("predict_full needs a full net");
  const std::string p(prev);
  const std::string t(typed);
  const Mat probs = predict_batch(std::span(&p, 1), std::span(&t, 1));
  return probs.data;
}

std::vector<double> ClusterNet::fit(const std::vector<ClusterExample>& examples, const HeadTrainConfig& config) {
  config.validate();
  if (examples.empty()) throw Error("empty training set");
  for (const auto& ex : examples) {
    if (ex.cluster < 0 || ex.cluster >= num_classes_) throw Error("cluster id out of range");
  }

  // Embed each distinct text once; the encoder stays frozen.
  std::unordered_map<std::string, int> text_index;
  std::vector<std::string> texts;
  auto intern = [&](const std::string& s) {
    const auto [it, added] = text_index.emplace(s, static_cast<int>(texts.size()));
    if (added) texts.push_back(s);
    return it->second;
  };
  std::vector<int> prev_idx;
  std::vector<int> typed_idx;
  for (const auto& ex : examples) {
    prev_idx.push_back(intern(ex.prev));
    if (kind_ == NetKind::kFull) typed_idx.push_back(intern(ex.typed));
  }
  std::vector<bool> present;
  const Mat table = embed_texts(texts, present);

  std::vector<size_t> keep;
  for (size_t i = 0; i < examples.size(); ++i) {
    const bool has_prev = present[prev_idx[i]];
    const bool has_typed = kind_ == NetKind::kFull && present[typed_idx[i]];
    if (has_prev || has_typed) keep.push_back(i);
  }
  if (keep.empty()) throw Error("every training example is empty");

  nn::OptimizerConfig oc;
  oc.kind = nn::OptimizerKind::kAdam;
  oc.learning_rate = config.learning_rate;
  nn::Optimizer optimizer(oc);
  const std::vector<nn::Parameter*> params = head_.pointers();
  head_.zero_grad();

  const int d = encoder_.config().d_out;
  Rng rng(config.seed);
  std::vector<double> epoch_loss;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(keep);
    double total = 0.0;
    size_t seen = 0;
    for (size_t begin = 0; begin < keep.size(); begin += config.batch_size) {
      const size_t end = std::min(keep.size(), begin + static_cast<size_t>(config.batch_size));
      const int b = static_cast<int>(end - begin);
      Mat targets(b, num_classes_);
      nn::Tape tape(false, nullptr, true);
      nn::Var x;
      if (kind_ == NetKind::kReply) {
        Mat xb(b, d);
        for (int r = 0; r < b; ++r) {
          const size_t i = keep[begin + r];
          std::copy_n(table.row(prev_idx[i]).begin(), d, xb.row(r).begin());
          targets(r, examples[i].cluster) = 1.0;
        }
        x = tape.constant(std::move(xb));
      } else {
        // Rows b.. of each side's block hold the sentinel.
        Mat pb(b, d);
        Mat tb(b, d);
        std::vector<int> pi(b);
        std::vector<int> ti(b);
        for (int r = 0; r < b; ++r) {
          const size_t i = keep[begin + r];
          std::copy_n(table.row(prev_idx[i]).begin(), d, pb.row(r).begin());
          std::copy_n(table.row(typed_idx[i]).begin(), d, tb.row(r).begin());
          pi[r] = present[prev_idx[i]] ? r : b;
          ti[r] = present[typed_idx[i]] ? r : b;
          targets(r, examples[i].cluster) = 1.0;
        }
        const nn::Var pv[] = {tape.constant(std::move(pb)), tape.param(head_.at("sentinel.prev"))};
        const nn::Var tv[] = {tape.constant(std::move(tb)), tape.param(head_.at("sentinel.typed"))};
        const nn::Var parts[] = {tape.gather_rows(tape.concat_rows(pv), pi),
                                 tape.gather_rows(tape.concat_rows(tv), ti)};
        x = tape.concat_cols(parts);
      }
      const nn::Var logits =
          tape.add_row(tape.matmul(x, tape.param(head_.at("head.w"))), tape.param(head_.at("head.b")));
      const nn::Var loss = tape.bce_with_logits(logits, targets);
      const double l = tape.scalar(loss);
      if (!std::isfinite(l)) throw Error("head training diverged");
      tape.backward(loss);
      optimizer.step(params);
      total += l * b;
      seen += b;
    }
    epoch_loss.push_back(total / static_cast<double>(seen));
  }
  return epoch_loss;
}

ActivationRanges ClusterNet::calibrate(std::span<const std::string> prev, std::span<const std::string> typed) {
  ActivationRanges ranges;
  embedder::ActivationHook saved = encoder_.activation_hook();
  encoder_.set_activation_hook(recording_hook(ranges));
  try {
    predict_batch(prev, typed);
  } catch (...) {
    encoder_.set_activation_hook(std::move(saved));
    throw;
  }
  encoder_.set_activation_hook(std::move(saved));
  return ranges;
}

nn::Checkpoint ClusterNet::to_checkpoint() const {
  nn::Checkpoint ckpt = encoder_.to_checkpoint();
  ckpt.meta["kind"] = net_kind_name(kind_);
  ckpt.meta["num_classes"] = num_classes_;
  ckpt.meta["t_reply"] = t_reply_;
  nn::append_parameters(ckpt, head_);
  return ckpt;
}

ClusterNet ClusterNet::from_checkpoint(const nn::Checkpoint& ckpt, corpus::Vocab vocab) {
  const std::string kind = ckpt.meta.value("kind", "");
  NetKind nk;
  if (kind == "reply_net") nk = NetKind::kReply;
  else if (kind == "full_net") nk = NetKind::kFull;
  else throw FormatError(FormatError::Code::kCorrupt, "not a cluster net checkpoint: " + kind);
  const int g = ckpt.meta.value("num_classes", 0);
  ClusterNet net(nk, embedder::Encoder::from_checkpoint(ckpt, std::move(vocab)), g, 0);
  nn::restore_parameters(ckpt, net.head_);
  net.set_t_reply(ckpt.meta.value("t_reply", kDefaultReplyThreshold));
  if (ckpt.meta.value("quantized", false)) {
    net.quantized_ = true;
    net.encoder_.set_activation_hook(fake_quant_hook(ActivationRanges::from_json(ckpt.meta.at("activation_ranges"))));
  }
  return net;
}

void ClusterNet::save(const std::string& path) const { nn::save_checkpoint(path, to_checkpoint()); }

ClusterNet ClusterNet::load(const std::string& checkpoint_path, const std::string& vocab_path) {
  return from_checkpoint(nn::load_checkpoint(checkpoint_path), corpus::read_vocab(vocab_path));
}

double top_k_overlap(const Mat& a, const Mat& b, int k) {
  if (!a.same_shape(b)) throw Error("score matrices differ in shape");
  if (a.rows == 0) return 1.0;
  k = std::min(k, a.cols);
  auto top = [k](std::span<const double> row) {
    std::vector<int> idx(row.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int x, int y) {
      return row[x] != row[y] ? row[x] > row[y] : x < y;
    });
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
  };
  double total = 0.0;
  for (int i = 0; i < a.rows; ++i) {
    const auto ta = top(a.row(i));
    const auto tb = top(b.row(i));
    std::vector<int> common;
    std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(common));
    total += static_cast<double>(common.size()) / k;
  }
  return total / a.rows;
}

}  // namespace sr::replynet

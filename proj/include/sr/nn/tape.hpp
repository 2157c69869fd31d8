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
#include <span>
#include <vector>

#include "sr/common/matrix.hpp"
#include "sr/common/rng.hpp"
#include "sr/nn/parameters.hpp"

namespace sr::nn {

using Var = int;

// Reverse-mode differentiation over matrix-valued operations. Forward calls
// record a node per operation; backward() replays them in reverse and
// accumulates into node gradients and Parameter::grad.
//
// A tape built with record=false keeps values only, which is what inference
// paths use.
class Tape {
 public:
  explicit Tape(bool training = false, Rng* rng = nullptr, bool record = true);

  bool training() const { return training_; }
  bool recording() const { return record_; }

  const Mat& value(Var v) const;
  double scalar(Var v) const { return value(v).data.at(0); }
  // Gradient of the last backward() target w.r.t. v (zero matrix if none).
  Mat gradient(Var v) const;

  Var constant(Mat m);
  Var param(const Parameter& p);
  // Rows of table selected by ids; ids equal to zero_id produce zero rows and
  // receive no gradient.
  Var lookup(const Parameter& table, std::span<const int> ids, int zero_id = -1);

  Var matmul(Var a, Var b);     // a (n x k) * b (k x m)
  Var matmul_nt(Var a, Var b);  // a (n x k) * b^T, b (m x k)
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);      // elementwise
  Var add_row(Var a, Var row);  // row (1 x m) broadcast over a's rows
  Var scale(Var a, double s);
  Var one_minus(Var a);
  Var relu(Var a);
  Var tanh(Var a);
  Var sigmoid(Var a);

  Var concat_cols(std::span<const Var> parts);
  Var slice_cols(Var a, int begin, int count);
  Var concat_rows(std::span<const Var> parts);
  Var slice_rows(Var a, int begin, int count);

  // x holds consecutive segments of `segment` rows; returns the windows of
  // `width` consecutive rows of each segment, flattened row-major into one
  // output row per window (segments * (segment - width + 1) rows).
  Var unfold(Var x, int segment, int width);
  // Column-wise max over consecutive groups of `segment` rows.
  Var segment_max(Var x, int segment);

  // Rows of x picked by index; index -1 yields a zero row.
  Var gather_rows(Var x, std::vector<int> index);
  // Mean over consecutive row groups of the given lengths (all >= 1).
  Var segment_mean(Var x, std::vector<int> lengths);
  // Multi-head scaled dot-product self-attention restricted to consecutive row
  // groups of the given lengths. q, k, v are N x D with D split into `heads`
  // column blocks; dropout applies to the attention weights. If probs is set,
  // the weights are appended to it per (segment, head).
  Var segment_attention(Var q, Var k, Var v, std::vector<int> lengths, int heads,
                        double dropout_p = 0.0, std::vector<Mat>* probs = nullptr);

  Var softmax_rows(Var a);
  Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
  Var mean_rows(Var a);
  // Inverted dropout; identity unless training with p > 0.
  Var dropout(Var a, double p);

  // Mean over rows of softmax cross-entropy with the diagonal as the target.
  Var softmax_xent_diagonal(Var scores);
  // Per-row sum of binary cross-entropy over columns, averaged over rows.
  Var bce_with_logits(Var logits, const Mat& targets);

  // Value transform with a pass-through gradient (fake quantization hooks).
  Var transform(Var a, const std::function<void(Mat&)>& fn);

  void backward(Var loss);

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    const Parameter* param = nullptr;
    bool requires_grad = false;
    std::function<void()> back;
  };

  Var push(Mat value, bool requires_grad);
  bool needs(Var v) const { return nodes_[v].requires_grad; }
  bool any_needs(std::initializer_list<Var> vs) const;
  Mat& grad_ref(Var v);
  bool has_grad(Var v) const;
  void on_backward(Var out, std::function<void()> fn);

  bool training_;
  Rng* rng_;
  bool record_;
  std::vector<Node> nodes_;
};

}  // namespace sr::nn

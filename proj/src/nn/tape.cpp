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

#include "sr/nn/tape.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include "sr/common/error.hpp"
#include "sr/kernels/kernels.hpp"

namespace sr::nn {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(std::string("tape shape error: ") + what);
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tape::Tape(bool training, Rng* rng, bool record) : training_(training), rng_(rng), record_(record) {
  if (training_ && rng_ == nullptr) throw ConfigError("training tape needs an rng");
  nodes_.reserve(256);
}

Var Tape::push(Mat value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad && record_;
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

const Mat& Tape::value(Var v) const {
  const Node& n = nodes_[v];
  return n.param != nullptr ? n.param->value : n.value;
}

bool Tape::any_needs(std::initializer_list<Var> vs) const {
  return std::any_of(vs.begin(), vs.end(), [this](Var v) { return needs(v); });
}

Mat& Tape::grad_ref(Var v) {
  Node& n = nodes_[v];
  if (n.param != nullptr) return n.param->grad;
  if (n.grad.empty() && !n.value.empty()) n.grad = Mat(n.value.rows, n.value.cols);
  return n.grad;
}

bool Tape::has_grad(Var v) const {
  const Node& n = nodes_[v];
  return n.param != nullptr || !n.grad.empty();
}

Mat Tape::gradient(Var v) const {
  const Node& n = nodes_[v];
  if (n.param != nullptr) return n.param->grad;
  if (n.grad.empty()) return Mat(value(v).rows, value(v).cols);
  return n.grad;
}

void Tape::on_backward(Var out, std::function<void()> fn) {
  if (nodes_[out].requires_grad) nodes_[out].back = std::move(fn);
}

Var Tape::constant(Mat m) { return push(std::move(m), false); }

Var Tape::param(const Parameter& p) {
  Node n;
  n.param = &p;
  n.requires_grad = record_ && p.trainable;
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

Var Tape::lookup(const Parameter& table, std::span<const int> ids, int zero_id) {
  const Mat& t = table.value;
  Mat out(static_cast<int>(ids.size()), t.cols);
  for (size_t r = 0; r < ids.size(); ++r) {
    require(ids[r] >= 0 && ids[r] < t.rows, "lookup id out of range");
    if (ids[r] == zero_id) continue;
    std::copy_n(t.row(ids[r]).begin(), t.cols, out.row(static_cast<int>(r)).begin());
  }
  const bool rg = record_ && table.trainable;
  const Var v = push(std::move(out), rg);
  if (rg) {
    std::vector<int> saved(ids.begin(), ids.end());
    on_backward(v, [this, v, &table, saved = std::move(saved), zero_id] {
      const Mat& g = nodes_[v].grad;
      for (size_t r = 0; r < saved.size(); ++r) {
        if (saved[r] == zero_id) continue;
        kernels::axpy(1.0, g.row(static_cast<int>(r)), table.grad.row(saved[r]));
      }
    });
  }
  return v;
}

Var Tape::matmul(Var a, Var b) {
  const Mat& A = value(a);
  const Mat& B = value(b);
  require(A.cols == B.rows, "matmul");
  Mat C(A.rows, B.cols);
  for (int i = 0; i < A.rows; ++i) {
    auto crow = C.row(i);
    for (int p = 0; p < A.cols; ++p) {
      const double x = A(i, p);
      if (x != 0.0) kernels::axpy(x, B.row(p), crow);
    }
  }
  const Var v = push(std::move(C), any_needs({a, b}));
  on_backward(v, [this, v, a, b] {
    const Mat& G = nodes_[v].grad;
    const Mat& A = value(a);
    const Mat& B = value(b);
    if (needs(a)) {
      Mat& dA = grad_ref(a);
      for (int i = 0; i < A.rows; ++i) {
        for (int p = 0; p < A.cols; ++p) dA(i, p) += kernels::dot(G.row(i), B.row(p));
      }
    }
    if (needs(b)) {
      Mat& dB = grad_ref(b);
      for (int i = 0; i < A.rows; ++i) {
        for (int p = 0; p < A.cols; ++p) {
          const double x = A(i, p);
          if (x != 0.0) kernels::axpy(x, G.row(i), dB.row(p));
        }
      }
    }
  });
  return v;
}

Var Tape::matmul_nt(Var a, Var b) {
  const Mat& A = value(a);
  const Mat& B = value(b);
  require(A.cols == B.cols, "matmul_nt");
  Mat C(A.rows, B.rows);
  for (int i = 0; i < A.rows; ++i) {
    for (int j = 0; j < B.rows; ++j) C(i, j) = kernels::dot(A.row(i), B.row(j));
  }
  const Var v = push(std::move(C), any_needs({a, b}));
  on_backward(v, [this, v, a, b] {
    const Mat& G = nodes_[v].grad;
    const Mat& A = value(a);
    const Mat& B = value(b);
    if (needs(a)) {
      Mat& dA = grad_ref(a);
      for (int i = 0; i < A.rows; ++i) {
        for (int j = 0; j < B.rows; ++j) kernels::axpy(G(i, j), B.row(j), dA.row(i));
      }
    }
    if (needs(b)) {
      Mat& dB = grad_ref(b);
      for (int i = 0; i < A.rows; ++i) {
        for (int j = 0; j < B.rows; ++j) kernels::axpy(G(i, j), A.row(i), dB.row(j));
      }
    }
  });
  return v;
}

Var Tape::add(Var a, Var b) {
  const Mat& A = value(a);
  const Mat& B = value(b);
  require(A.same_shape(B), "add");
  Mat C = A;
  kernels::axpy(1.0, B.data, C.data);
  const Var v = push(std::move(C), any_needs({a, b}));
  on_backward(v, [this, v, a, b] {
    const Mat& G = nodes_[v].grad;
    if (needs(a)) kernels::axpy(1.0, G.data, grad_ref(a).data);
    if (needs(b)) kernels::axpy(1.0, G.data, grad_ref(b).data);
  });
  return v;
}

Var Tape::sub(Var a, Var b) {
  const Mat& A = value(a);
  const Mat& B = value(b);
  require(A.same_shape(B), "sub");
  Mat C = A;
  kernels::axpy(-1.0, B.data, C.data);
  const Var v = push(std::move(C), any_needs({a, b}));
  on_backward(v, [this, v, a, b] {
    const Mat& G = nodes_[v].grad;
    if (needs(a)) kernels::axpy(1.0, G.data, grad_ref(a).data);
    if (needs(b)) kernels::axpy(-1.0, G.data, grad_ref(b).data);
  });
  return v;
}

Var Tape::mul(Var a, Var b) {
  const Mat& A = value(a);
  const Mat& B = value(b);
  require(A.same_shape(B), "mul");
  Mat C(A.rows, A.cols);
  for (size_t i = 0; i < C.size(); ++i) C.data[i] = A.data[i] * B.data[i];
  const Var v = push(std::move(C), any_needs({a, b}));
  on_backward(v, [this, v, a, b] {
    const Mat& G = nodes_[v].grad;
    const Mat& A = value(a);
    const Mat& B = value(b);
    if (needs(a)) {
      Mat& dA = grad_ref(a);
      for (size_t i = 0; i < G.size(); ++i) dA.data[i] += G.data[i] * B.data[i];
    }
    if (needs(b)) {
      Mat& dB = grad_ref(b);
      for (size_t i = 0; i < G.size(); ++i) dB.data[i] += G.data[i] * A.data[i];
    }
  });
  return v;
}

Var Tape::add_row(Var a, Var row) {
  const Mat& A = value(a);
  const Mat& R = value(row);
  require(R.rows == 1 && R.cols == A.cols, "add_row");
  Mat C = A;
  for (int i = 0; i < C.rows; ++i) kernels::axpy(1.0, R.data, C.row(i));
  const Var v = push(std::move(C), any_needs({a, row}));
  on_backward(v, [this, v, a, row] {
    const Mat& G = nodes_[v].grad;
    if (needs(a)) kernels::axpy(1.0, G.data, grad_ref(a).data);
    if (needs(row)) {
      Mat& dR = grad_ref(row);
      for (int i = 0; i < G.rows; ++i) kernels::axpy(1.0, G.row(i), dR.data);
    }
  });
  return v;
}

Var Tape::scale(Var a, double s) {
  Mat C = value(a);
  for (auto& x : C.data) x *= s;
  const Var v = push(std::move(C), needs(a));
  on_backward(v, [this, v, a, s] { kernels::axpy(s, nodes_[v].grad.data, grad_ref(a).data); });
  return v;
}

Var Tape::one_minus(Var a) {
  Mat C = value(a);
  for (auto& x : C.data) x = 1.0 - x;
  const Var v = push(std::move(C), needs(a));
  on_backward(v, [this, v, a] { kernels::axpy(-1.0, nodes_[v].grad.data, grad_ref(a).data); });
  return v;
}

Var Tape::relu(Var a) {
  Mat C = value(a);
  for (auto& x : C.data) x = x > 0.0 ? x : 0.0;
  const Var v = push(std::move(C), needs(a));
  on_backward(v, [this, v, a] {
    const Mat& G = nodes_[v].grad;
    const Mat& Y = nodes_[v].value;
    Mat& dA = grad_ref(a);
    for (size_t i = 0; i < G.size(); ++i) {
      if (Y.data[i] > 0.0) dA.data[i] += G.data[i];
    }
  });
  return v;
}

Var Tape::tanh(Var a) {
  Mat C = value(a);
  for (auto& x : C.data) x = std::tanh(x);
  const Var v = push(std::move(C), needs(a));
  on_backward(v, [this, v, a] {
    const Mat& G = nodes_[v].grad;
    const Mat& Y = nodes_[v].value;
    Mat& dA = grad_ref(a);
    for (size_t i = 0; i < G.size(); ++i) dA.data[i] += G.data[i] * (1.0 - Y.data[i] * Y.data[i]);
  });
  return v;
}

Var Tape::sigmoid(Var a) {
  Mat C = value(a);
  for (auto& x : C.data) x = stable_sigmoid(x);
  const Var v = push(std::move(C), needs(a));
  on_backward(v, [this, v, a] {
    const Mat& G = nodes_[v].grad;
    const Mat& Y = nodes_[v].value;
    Mat& dA = grad_ref(a);
    for (size_t i = 0; i < G.size(); ++i) dA.data[i] += G.data[i] * Y.data[i] * (1.0 - Y.data[i]);
  });
  return v;
}

Var Tape::concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols of nothing");
  const int rows = value(parts[0]).rows;
  int cols = 0;
  bool rg = false;
  for (Var p : parts) {
    require(value(p).rows == rows, "concat_cols rows");
    cols += value(p).cols;
    rg = rg || needs(p);
  }
  Mat C(rows, cols);
  int off = 0;
  for (Var p : parts) {
    const Mat& P = value(p);
    for (int i = 0; i < rows; ++i) std::copy_n(P.row(i).begin(), P.cols, C.row(i).begin() + off);
    off += P.cols;
  }
  const Var v = push(std::move(C), rg);
  std::vector<Var> saved(parts.begin(), parts.end());
  on_backward(v, [this, v, saved = std::move(saved)] {
    const Mat& G = nodes_[v].grad;
    int off = 0;
    for (Var p : saved) {
      const int pc = value(p).cols;
      if (needs(p)) {
        Mat& dP = grad_ref(p);
        for (int i = 0; i < G.rows; ++i) {
          kernels::axpy(1.0, G.row(i).subspan(off, pc), dP.row(i));
        }
      }
      off += pc;
    }
  });
  return v;
}

Var Tape::slice_cols(Var a, int begin, int count) {
  const Mat& A = value(a);
  require(begin >= 0 && count >= 0 && begin + count <= A.cols, "slice_cols");
  Mat C(A.rows, count);
  for (int i = 0; i < A.rows; ++i) std::copy_n(A.row(i).begin() + begin, count, C.row(i).begin());
  const Var v = push(std::move(C), needs(a));
  on_backward(v, [this, v, a, begin, count] {
    const Mat& G = nodes_[v].grad;
    Mat& dA = grad_ref(a);
    for (int i = 0; i < G.rows; ++i) kernels::axpy(1.0, G.row(i), dA.row(i).subspan(begin, count));
  });
  return v;
}

Var Tape::concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows of nothing");
  const int cols = value(parts[0]).cols;
  int rows = 0;
  bool rg = false;
  for (Var p : parts) {
    require(value(p).cols == cols, "concat_rows cols");
    rows += value(p).rows;
    rg = rg || needs(p);
  }
  Mat C(rows, cols);
  size_t off = 0;
  for (Var p : parts) {
    const Mat& P = value(p);
    std::copy(P.data.begin(), P.data.end(), C.data.begin() + off);
    off += P.size();
  }
  const Var v = push(std::move(C), rg);
  std::vector<Var> saved(parts.begin(), parts.end());
  on_backward(v, [this, v, saved = std::move(saved)] {
    const Mat& G = nodes_[v].grad;
    size_t off = 0;
    for (Var p : saved) {
      const size_t n = value(p).size();
      if (needs(p)) {
        kernels::axpy(1.0, std::span<const double>(G.data).subspan(off, n), grad_ref(p).data);
      }
      off += n;
    }
  });
  return v;
}

Var Tape::slice_rows(Var a, int begin, int count) {
  const Mat& A = value(a);
  require(begin >= 0 && count >= 0 && begin + count <= A.rows, "slice_rows");
  Mat C(count, A.cols);
  std::copy_n(A.data.begin() + static_cast<size_t>(begin) * A.cols, C.size(), C.data.begin());
  const Var v = push(std::move(C), needs(a));
  on_backward(v, [this, v, a, begin] {
    const Mat& G = nodes_[v].grad;
    Mat& dA = grad_ref(a);
    kernels::axpy(1.0, G.data,
                  std::span<double>(dA.data).subspan(static_cast<size_t>(begin) * dA.cols, G.size()));
  });
  return v;
}

Var Tape::unfold(Var x, int segment, int width) {
  const Mat& X = value(x);
  require(segment > 0 && X.rows % segment == 0, "unfold segment");
  require(width >= 1 && width <= segment, "unfold width");
  const int segs = X.rows / segment;
  const int windows = segment - width + 1;
  const int c = X.cols;
  Mat C(segs * windows, width * c);
  for (int s = 0; s < segs; ++s) {
    for (int t = 0; t < windows; ++t) {
      auto out = C.row(s * windows + t);
      for (int j = 0; j < width; ++j) {
        std::copy_n(X.row(s * segment + t + j).begin(), c, out.begin() + j * c);
      }
    }
  }
  const Var v = push(std::move(C), needs(x));
  on_backward(v, [this, v, x, segment, width, segs, windows, c] {
    const Mat& G = nodes_[v].grad;
    Mat& dX = grad_ref(x);
    for (int s = 0; s < segs; ++s) {
      for (int t = 0; t < windows; ++t) {
        auto g = G.row(s * windows + t);
        for (int j = 0; j < width; ++j) {
          kernels::axpy(1.0, g.subspan(static_cast<size_t>(j) * c, c), dX.row(s * segment + t + j));
        }
      }
    }
  });
  return v;
}

Var Tape::segment_max(Var x, int segment) {
  const Mat& X = value(x);
  require(segment > 0 && X.rows % segment == 0, "segment_max");
  const int segs = X.rows / segment;
  Mat C(segs, X.cols);
  std::vector<int> arg(static_cast<size_t>(segs) * X.cols);
  for (int s = 0; s < segs; ++s) {
    for (int j = 0; j < X.cols; ++j) {
      int best = s * segment;
      for (int r = s * segment + 1; r < (s + 1) * segment; ++r) {
        if (X(r, j) > X(best, j)) best = r;
      }
      C(s, j) = X(best, j);
      arg[static_cast<size_t>(s) * X.cols + j] = best;
    }
  }
  const Var v = push(std::move(C), needs(x));
  on_backward(v, [this, v, x, arg = std::move(arg)] {
    const Mat& G = nodes_[v].grad;
    Mat& dX = grad_ref(x);
    for (int s = 0; s < G.rows; ++s) {
      for (int j = 0; j < G.cols; ++j) dX(arg[static_cast<size_t>(s) * G.cols + j], j) += G(s, j);
    }
  });
  return v;
}

Var Tape::softmax_rows(Var a) {
  Mat C = value(a);
  for (int i = 0; i < C.rows; ++i) {
    auto r = C.row(i);
    const double m = *std::max_element(r.begin(), r.end());
    double s = 0.0;
    for (auto& x : r) s += (x = std::exp(x - m));
    for (auto& x : r) x /= s;
  }
  const Var v = push(std::move(C), needs(a));
  on_backward(v, [this, v, a] {
    const Mat& G = nodes_[v].grad;
    const Mat& Y = nodes_[v].value;
    Mat& dA = grad_ref(a);
    for (int i = 0; i < Y.rows; ++i) {
      const double inner = kernels::dot(G.row(i), Y.row(i));
      for (int j = 0; j < Y.cols; ++j) dA(i, j) += Y(i, j) * (G(i, j) - inner);
    }
  });
  return v;
}

Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
  const Mat& X = value(x);
  const Mat& g = value(gain);
  const Mat& b = value(bias);
  require(g.rows == 1 && b.rows == 1 && g.cols == X.cols && b.cols == X.cols, "layer_norm");
  const int n = X.cols;
  Mat xhat(X.rows, n);
  std::vector<double> inv_std(X.rows);
  Mat C(X.rows, n);
  for (int i = 0; i < X.rows; ++i) {
    const auto r = X.row(i);
    double mu = 0.0;
    for (double v : r) mu += v;
    mu /= n;
    double var = 0.0;
    for (double v : r) var += (v - mu) * (v - mu);
    var /= n;
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < n; ++j) {
      xhat(i, j) = (r[j] - mu) * inv_std[i];
      C(i, j) = xhat(i, j) * g(0, j) + b(0, j);
    }
  }
  const Var v = push(std::move(C), any_needs({x, gain, bias}));
  on_backward(v, [this, v, x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std)] {
    const Mat& G = nodes_[v].grad;
    const Mat& g = value(gain);
    const int n = G.cols;
    if (needs(gain)) {
      Mat& dg = grad_ref(gain);
      for (int i = 0; i < G.rows; ++i)
        for (int j = 0; j < n; ++j) dg(0, j) += G(i, j) * xhat(i, j);
    }
    if (needs(bias)) {
      Mat& db = grad_ref(bias);
      for (int i = 0; i < G.rows; ++i) kernels::axpy(1.0, G.row(i), db.data);
    }
    if (needs(x)) {
      Mat& dX = grad_ref(x);
      std::vector<double> dxhat(n);
      for (int i = 0; i < G.rows; ++i) {
        double mean_d = 0.0;
        double mean_dx = 0.0;
        for (int j = 0; j < n; ++j) {
          dxhat[j] = G(i, j) * g(0, j);
          mean_d += dxhat[j];
          mean_dx += dxhat[j] * xhat(i, j);
        }
        mean_d /= n;
        mean_dx /= n;
        for (int j = 0; j < n; ++j) {
          dX(i, j) += inv_std[i] * (dxhat[j] - mean_d - xhat(i, j) * mean_dx);
        }
      }
    }
  });
  return v;
}

Var Tape::mean_rows(Var a) {
  const Mat& A = value(a);
  require(A.rows > 0, "mean_rows of empty matrix");
  Mat C(1, A.cols);
  for (int i = 0; i < A.rows; ++i) kernels::axpy(1.0, A.row(i), C.data);
  for (auto& x : C.data) x /= A.rows;
  const Var v = push(std::move(C), needs(a));
  on_backward(v, [this, v, a] {
    const Mat& G = nodes_[v].grad;
    Mat& dA = grad_ref(a);
    const double w = 1.0 / dA.rows;
    for (int i = 0; i < dA.rows; ++i) kernels::axpy(w, G.data, dA.row(i));
  });
  return v;
}

Var Tape::dropout(Var a, double p) {
  if (!training_ || p <= 0.0) return a;
  require(p < 1.0, "dropout probability");
  const Mat& A = value(a);
  Mat mask(A.rows, A.cols);
  const double keep = 1.0 / (1.0 - p);
  for (auto& m : mask.data) m = rng_->bernoulli(p) ? 0.0 : keep;
  Mat C(A.rows, A.cols);
  for (size_t i = 0; i < C.size(); ++i) C.data[i] = A.data[i] * mask.data[i];
  const Var v = push(std::move(C), needs(a));
  on_backward(v, [this, v, a, mask = std::move(mask)] {
    const Mat& G = nodes_[v].grad;
    Mat& dA = grad_ref(a);
    for (size_t i = 0; i < G.size(); ++i) dA.data[i] += G.data[i] * mask.data[i];
  });
  return v;
}

Var Tape::softmax_xent_diagonal(Var scores) {
  const Mat& S = value(scores);
  require(S.rows == S.cols && S.rows > 0, "softmax_xent_diagonal needs a square matrix");
  const int b = S.rows;
  Mat probs(b, b);
  double loss = 0.0;
  for (int i = 0; i < b; ++i) {
    const auto r = S.row(i);
    const double m = *std::max_element(r.begin(), r.end());
    double z = 0.0;
    for (double x : r) z += std::exp(x - m);
    const double lse = m + std::log(z);
    loss += lse - S(i, i);
    for (int j = 0; j < b; ++j) probs(i, j) = std::exp(S(i, j) - lse);
  }
  Mat out(1, 1, loss / b);
  const Var v = push(std::move(out), needs(scores));
  on_backward(v, [this, v, scores, probs = std::move(probs)] {
    const double g = nodes_[v].grad(0, 0) / probs.rows;
    Mat& dS = grad_ref(scores);
    for (int i = 0; i < probs.rows; ++i) {
      for (int j = 0; j < probs.cols; ++j) dS(i, j) += g * (probs(i, j) - (i == j ? 1.0 : 0.0));
    }
  });
  return v;
}

Var Tape::bce_with_logits(Var logits, const Mat& targets) {
  const Mat& Z = value(logits);
  require(Z.same_shape(targets) && Z.rows > 0, "bce_with_logits");
  double loss = 0.0;
  for (size_t i = 0; i < Z.size(); ++i) {
    const double z = Z.data[i];
    loss += std::max(z, 0.0) - z * targets.data[i] + std::log1p(std::exp(-std::abs(z)));
  }
  Mat out(1, 1, loss / Z.rows);
  const Var v = push(std::move(out), needs(logits));
  on_backward(v, [this, v, logits, targets] {
    const Mat& Z = value(logits);
    const double g = nodes_[v].grad(0, 0) / Z.rows;
    Mat& dZ = grad_ref(logits);
    for (size_t i = 0; i < Z.size(); ++i) {
      dZ.data[i] += g * (stable_sigmoid(Z.data[i]) - targets.data[i]);
    }
  });
  return v;
}

Var Tape::transform(Var a, const std::function<void(Mat&)>& fn) {
  Mat C = value(a);
  fn(C);
  const Var v = push(std::move(C), needs(a));
  on_backward(v, [this, v, a] { kernels::axpy(1.0, nodes_[v].grad.data, grad_ref(a).data); });
  return v;
}

void Tape::backward(Var loss) {
  if (!record_) throw Error("backward on a non-recording tape");
  const Mat& L = value(loss);
  require(L.rows == 1 && L.cols == 1, "backward target must be a scalar");
  for (auto& n : nodes_) {
    if (n.param == nullptr) n.grad = Mat();
  }
  grad_ref(loss)(0, 0) = 1.0;
  for (Var i = loss; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.back && has_grad(i)) n.back();
  }
}

}  // namespace sr::nn

namespace sr::nn {

Var Tape::gather_rows(Var x, std::vector<int> index) {
  const Mat& X = value(x);
  Mat C(static_cast<int>(index.size()), X.cols);
  for (size_t r = 0; r < index.size(); ++r) {
    if (index[r] < 0) continue;
    require(index[r] < X.rows, "gather_rows index");
    std::copy_n(X.row(index[r]).begin(), X.cols, C.row(static_cast<int>(r)).begin());
  }
  const Var v = push(std::move(C), needs(x));
  on_backward(v, [this, v, x, index = std::move(index)] {
    const Mat& G = nodes_[v].grad;
    Mat& dX = grad_ref(x);
    for (size_t r = 0; r < index.size(); ++r) {
      if (index[r] >= 0) kernels::axpy(1.0, G.row(static_cast<int>(r)), dX.row(index[r]));
    }
  });
  return v;
}

Var Tape::segment_mean(Var x, std::vector<int> lengths) {
  const Mat& X = value(x);
  Mat C(static_cast<int>(lengths.size()), X.cols);
  int off = 0;
  for (size_t s = 0; s < lengths.size(); ++s) {
    require(lengths[s] >= 1, "segment_mean empty segment");
    auto out = C.row(static_cast<int>(s));
    for (int r = 0; r < lengths[s]; ++r) kernels::axpy(1.0, X.row(off + r), out);
    for (auto& e : out) e /= lengths[s];
    off += lengths[s];
  }
  require(off == X.rows, "segment_mean lengths do not cover rows");
  const Var v = push(std::move(C), needs(x));
  on_backward(v, [this, v, x, lengths = std::move(lengths)] {
    const Mat& G = nodes_[v].grad;
    Mat& dX = grad_ref(x);
    int off = 0;
    for (size_t s = 0; s < lengths.size(); ++s) {
      const double w = 1.0 / lengths[s];
      for (int r = 0; r < lengths[s]; ++r) kernels::axpy(w, G.row(static_cast<int>(s)), dX.row(off + r));
      off += lengths[s];
    }
  });
  return v;
}

Var Tape::segment_attention(Var q, Var k, Var v, std::vector<int> lengths, int heads, double dropout_p,
                            std::vector<Mat>* probs) {
  const Mat& Q = value(q);
  const Mat& K = value(k);
  const Mat& V = value(v);
  require(Q.same_shape(K) && Q.same_shape(V), "segment_attention shapes");
  require(heads >= 1 && Q.cols % heads == 0, "segment_attention heads");
  const int dh = Q.cols / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const bool drop = training_ && dropout_p > 0.0;
  const double keep = drop ? 1.0 / (1.0 - dropout_p) : 1.0;

  // Per (segment, head): softmax weights P and dropped weights D (== P when
  // dropout is off).
  std::vector<Mat> P;
  std::vector<Mat> D;
  Mat out(Q.rows, Q.cols);
  int off = 0;
  for (int len : lengths) {
    require(len >= 1, "segment_attention empty segment");
    for (int h = 0; h < heads; ++h) {
      const int c0 = h * dh;
      Mat p(len, len);
      for (int i = 0; i < len; ++i) {
        auto qi = Q.row(off + i).subspan(c0, dh);
        double m = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < len; ++j) {
          p(i, j) = inv_sqrt * kernels::dot(qi, K.row(off + j).subspan(c0, dh));
          m = std::max(m, p(i, j));
        }
        double z = 0.0;
        for (int j = 0; j < len; ++j) z += (p(i, j) = std::exp(p(i, j) - m));
        for (int j = 0; j < len; ++j) p(i, j) /= z;
      }
      Mat d = p;
      if (drop) {
        for (auto& e : d.data) e = rng_->bernoulli(dropout_p) ? 0.0 : e * keep;
      }
      for (int i = 0; i < len; ++i) {
        auto o = out.row(off + i).subspan(c0, dh);
        for (int j = 0; j < len; ++j) kernels::axpy(d(i, j), V.row(off + j).subspan(c0, dh), o);
      }
      if (probs != nullptr) probs->push_back(p);
      P.push_back(std::move(p));
      D.push_back(std::move(d));
    }
    off += len;
  }
  require(off == Q.rows, "segment_attention lengths do not cover rows");
  const Var o = push(std::move(out), any_needs({q, k, v}));
  if (!nodes_[o].requires_grad) return o;
  on_backward(o, [this, o, q, k, v, heads, dh, inv_sqrt, lengths = std::move(lengths),
                  P = std::move(P), D = std::move(D)] {
    const Mat& G = nodes_[o].grad;
    const Mat& Q = value(q);
    const Mat& K = value(k);
    const Mat& V = value(v);
    Mat* dQ = needs(q) ? &grad_ref(q) : nullptr;
    Mat* dK = needs(k) ? &grad_ref(k) : nullptr;
    Mat* dV = needs(v) ? &grad_ref(v) : nullptr;
    int off = 0;
    size_t idx = 0;
    for (int len : lengths) {
      for (int h = 0; h < heads; ++h, ++idx) {
        const int c0 = h * dh;
        const Mat& p = P[idx];
        const Mat& d = D[idx];
        for (int i = 0; i < len; ++i) {
          auto gi = G.row(off + i).subspan(c0, dh);
          // Gradient w.r.t. the (dropped) weights, mapped back through the mask.
          std::vector<double> dp(len);
          for (int j = 0; j < len; ++j) {
            const double gd = kernels::dot(gi, V.row(off + j).subspan(c0, dh));
            dp[j] = p(i, j) == 0.0 ? 0.0 : gd * (d(i, j) / p(i, j));
            if (dV != nullptr) kernels::axpy(d(i, j), gi, dV->row(off + j).subspan(c0, dh));
          }
          double inner = 0.0;
          for (int j = 0; j < len; ++j) inner += dp[j] * p(i, j);
          for (int j = 0; j < len; ++j) {
            const double ds = p(i, j) * (dp[j] - inner) * inv_sqrt;
            if (ds == 0.0) continue;
            if (dQ != nullptr) kernels::axpy(ds, K.row(off + j).subspan(c0, dh), dQ->row(off + i).subspan(c0, dh));
            if (dK != nullptr) kernels::axpy(ds, Q.row(off + i).subspan(c0, dh), dK->row(off + j).subspan(c0, dh));
          }
        }
      }
      off += len;
    }
  });
  return o;
}

}  // namespace sr::nn

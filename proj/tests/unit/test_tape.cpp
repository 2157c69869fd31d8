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

#include <cmath>

#include "doctest.h"
#include "sr/nn/parameters.hpp"
#include "sr/nn/tape.hpp"
#include "support/finite_diff.hpp"

using sr::Mat;
using sr::Rng;
using sr::nn::Parameter;
using sr::nn::ParameterStore;
using sr::nn::Tape;
using sr::nn::Var;

namespace {

// Random weighted sum of an op's output, so every output element contributes.
double weighted_sum_check(ParameterStore& ps, const std::function<Var(Tape&)>& op, uint64_t seed = 7) {
  Mat weights;
  auto full = [&](Tape& t) {
    const Var out = op(t);
    const Mat& v = t.value(out);
    if (weights.empty()) {
      Rng rng(seed);
      weights = Mat(v.rows, v.cols);
      for (auto& w : weights.data) w = rng.uniform(-1.0, 1.0);
    }
    const Var prod = t.mul(out, t.constant(weights));
    Mat ones(1, v.rows, 1.0);
    Mat ones_c(v.cols, 1, 1.0);
    return t.matmul(t.matmul(t.constant(ones), prod), t.constant(ones_c));
  };
  ps.zero_grad();
  {
    Tape t(false, nullptr, true);
    t.backward(full(t));
  }
  const auto r = sr::testing::check_gradients(ps.pointers(), [&] {
    Tape t(false, nullptr, false);
    return t.scalar(full(t));
  });
  INFO(r.worst);
  return r.max_rel_error;
}

Parameter& random_param(ParameterStore& ps, const std::string& name, int r, int c, Rng& rng) {
  Parameter& p = ps.add(name, r, c);
  for (auto& x : p.value.data) x = rng.uniform(-1.0, 1.0);
  return p;
}

}  // namespace

TEST_SUITE("nn") {
  TEST_CASE("elementwise and matrix ops match finite differences") {
    Rng rng(3);
    ParameterStore ps;
    Parameter& a = random_param(ps, "a", 3, 4, rng);
    Parameter& b = random_param(ps, "b", 4, 2, rng);
    Parameter& c = random_param(ps, "c", 3, 4, rng);
    Parameter& row = random_param(ps, "row", 1, 4, rng);

    CHECK(weighted_sum_check(ps, [&](Tape& t) { return t.matmul(t.param(a), t.param(b)); }) < 1e-6);
    CHECK(weighted_sum_check(ps, [&](Tape& t) { return t.matmul_nt(t.param(a), t.param(c)); }) < 1e-6);
    CHECK(weighted_sum_check(ps, [&](Tape& t) {
            return t.mul(t.tanh(t.param(a)), t.sigmoid(t.sub(t.param(c), t.param(a))));
          }) < 1e-6);
    CHECK(weighted_sum_check(ps, [&](Tape& t) {
            return t.one_minus(t.scale(t.add_row(t.param(a), t.param(row)), 0.5));
          }) < 1e-6);
    CHECK(weighted_sum_check(ps, [&](Tape& t) { return t.softmax_rows(t.param(a)); }) < 1e-6);
    CHECK(weighted_sum_check(ps, [&](Tape& t) { return t.mean_rows(t.param(a)); }) < 1e-6);
  }

  TEST_CASE("layer norm gradients") {
    Rng rng(4);
    ParameterStore ps;
    Parameter& x = random_param(ps, "x", 3, 5, rng);
    Parameter& g = random_param(ps, "g", 1, 5, rng);
    Parameter& b = random_param(ps, "b", 1, 5, rng);
    CHECK(weighted_sum_check(ps, [&](Tape& t) { return t.layer_norm(t.param(x), t.param(g), t.param(b)); }) <
          1e-5);
  }

  TEST_CASE("shape ops gradients") {
    Rng rng(5);
    ParameterStore ps;
    Parameter& a = random_param(ps, "a", 4, 3, rng);
    Parameter& b = random_param(ps, "b", 4, 2, rng);
    Parameter& c = random_param(ps, "c", 2, 3, rng);
    CHECK(weighted_sum_check(ps, [&](Tape& t) {
            const Var parts[] = {t.param(a), t.param(b)};
            return t.slice_cols(t.concat_cols(parts), 1, 3);
          }) < 1e-6);
    CHECK(weighted_sum_check(ps, [&](Tape& t) {
            const Var parts[] = {t.param(a), t.param(c)};
            return t.slice_rows(t.concat_rows(parts), 2, 3);
          }) < 1e-6);
    CHECK(weighted_sum_check(ps, [&](Tape& t) { return t.gather_rows(t.param(a), {3, -1, 0, 3}); }) < 1e-6);
    CHECK(weighted_sum_check(ps, [&](Tape& t) { return t.segment_mean(t.param(a), {1, 3}); }) < 1e-6);
    CHECK(weighted_sum_check(ps, [&](Tape& t) { return t.unfold(t.param(a), 2, 2); }) < 1e-6);
    CHECK(weighted_sum_check(ps, [&](Tape& t) { return t.segment_max(t.param(a), 2); }) < 1e-6);
  }

  TEST_CASE("lookup routes gradients to selected rows only") {
    Rng rng(6);
    ParameterStore ps;
    Parameter& table = random_param(ps, "table", 5, 3, rng);
    const std::vector<int> ids{2, 0, 2, 4};
    CHECK(weighted_sum_check(ps, [&](Tape& t) { return t.lookup(table, ids, 0); }) < 1e-6);
    for (int c = 0; c < 3; ++c) {
      CHECK(table.grad(0, c) == 0.0);
      CHECK(table.grad(1, c) == 0.0);
      CHECK(table.grad(3, c) == 0.0);
    }
  }

  TEST_CASE("segment attention gradients") {
    Rng rng(8);
    ParameterStore ps;
    Parameter& q = random_param(ps, "q", 5, 4, rng);
    Parameter& k = random_param(ps, "k", 5, 4, rng);
    Parameter& v = random_param(ps, "v", 5, 4, rng);
    CHECK(weighted_sum_check(ps, [&](Tape& t) {
            return t.segment_attention(t.param(q), t.param(k), t.param(v), {2, 3}, 2);
          }) < 1e-6);
  }

  TEST_CASE("attention with dropout uses a replayable mask") {
    Rng init(9);
    ParameterStore ps;
    Parameter& q = random_param(ps, "q", 3, 4, init);
    Parameter& k = random_param(ps, "k", 3, 4, init);
    Parameter& v = random_param(ps, "v", 3, 4, init);
    auto loss = [&](Tape& t) {
      const Var a = t.segment_attention(t.param(q), t.param(k), t.param(v), {3}, 2, 0.3);
      return t.bce_with_logits(a, Mat(3, 4, 0.25));
    };
    ps.zero_grad();
    {
      Rng rng(42);
      Tape t(true, &rng, true);
      t.backward(loss(t));
    }
    const auto r = sr::testing::check_gradients(ps.pointers(), [&] {
      Rng rng(42);
      Tape t(true, &rng, false);
      return t.scalar(loss(t));
    });
    INFO(r.worst);
    CHECK(r.max_rel_error < 1e-6);
  }

  TEST_CASE("losses") {
    Tape t(false, nullptr, false);
    CHECK(t.scalar(t.softmax_xent_diagonal(t.constant(Mat(4, 4, 0.3)))) == doctest::Approx(std::log(4.0)));
    Mat s(3, 3, -10.0);
    for (int i = 0; i < 3; ++i) s(i, i) = 10.0;
    const double expected = std::log(1.0 + 2.0 * std::exp(-20.0));
    CHECK(t.scalar(t.softmax_xent_diagonal(t.constant(s))) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(t.scalar(t.softmax_xent_diagonal(t.constant(Mat(1, 1, 2.0)))) == 0.0);
    CHECK_THROWS(t.softmax_xent_diagonal(t.constant(Mat(2, 3))));

    Rng rng(10);
    ParameterStore ps;
    Parameter& z = random_param(ps, "z", 2, 3, rng);
    Mat targets(2, 3);
    targets(0, 1) = 1.0;
    targets(1, 2) = 1.0;
    ps.zero_grad();
    {
      Tape tt(false, nullptr, true);
      tt.backward(tt.bce_with_logits(tt.param(z), targets));
    }
    const auto r = sr::testing::check_gradients(ps.pointers(), [&] {
      Tape tt(false, nullptr, false);
      return tt.scalar(tt.bce_with_logits(tt.param(z), targets));
    });
    CHECK(r.max_rel_error < 1e-6);
  }

  TEST_CASE("dropout is identity outside training") {
    Tape t(false, nullptr, false);
    const Var x = t.constant(Mat(2, 2, 1.5));
    CHECK(t.dropout(x, 0.5) == x);
  }
}

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
#include <vector>

#include "doctest.h"
#include "sr/common/rng.hpp"
#include "sr/kernels/kernels.hpp"

namespace k = sr::kernels;

namespace {

std::vector<double> random_vector(size_t n, sr::Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-scale, scale);
  return v;
}

// Accumulation order differs between variants, so compare against the size
// of the summed terms rather than the result.
double sum_abs_products(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] * b[i]);
  return s;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("avx2 variants agree with the scalar reference") {
    if (!k::avx2_supported()) {
      MESSAGE("AVX2 not available; equivalence not exercised");
      return;
    }
    sr::Rng rng(11);
    for (size_t n : {0, 1, 3, 4, 5, 7, 8, 15, 16, 17, 31, 64, 255, 1000}) {
      CAPTURE(n);
      const auto a = random_vector(n, rng);
      const auto b = random_vector(n, rng);
      const double tol = 1e-14 * (1.0 + sum_abs_products(a, b));
      CHECK(std::abs(k::avx2::dot(a.data(), b.data(), n) - k::scalar::dot(a.data(), b.data(), n)) <= tol);

      double d2 = 0.0;
      for (size_t i = 0; i < n; ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
      CHECK(std::abs(k::avx2::squared_distance(a.data(), b.data(), n) -
                     k::scalar::squared_distance(a.data(), b.data(), n)) <= 1e-14 * (1.0 + d2));

      std::vector<double> y1 = b;
      std::vector<double> y2 = b;
      k::scalar::axpy(0.37, a.data(), y1.data(), n);
      k::avx2::axpy(0.37, a.data(), y2.data(), n);
      for (size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-15 * (1.0 + std::abs(y1[i])));
    }
  }

  TEST_CASE("quantize and dequantize variants are bit-identical") {
    if (!k::avx2_supported()) return;
    sr::Rng rng(5);
    for (size_t n : {0, 1, 5, 8, 9, 16, 33, 300}) {
      CAPTURE(n);
      auto x = random_vector(n, rng, 3.0);
      // exact half steps exercise round-half-even
      for (size_t i = 0; i < n; i += 3) x[i] = 0.5 * std::round(x[i] / 0.01) * 0.01 + 0.005;
      std::vector<int8_t> q1(n);
      std::vector<int8_t> q2(n);
      k::scalar::quantize_int8(x.data(), n, 0.01, -3, q1.data());
      k::avx2::quantize_int8(x.data(), n, 0.01, -3, q2.data());
      CHECK(q1 == q2);
      std::vector<double> d1(n);
      std::vector<double> d2(n);
      k::scalar::dequantize_int8(q1.data(), n, 0.01, -3, d1.data());
      k::avx2::dequantize_int8(q1.data(), n, 0.01, -3, d2.data());
      CHECK(d1 == d2);
    }
  }

  TEST_CASE("quantize rounds half to even and saturates") {
    const std::vector<double> x = {0.5, 1.5, 2.5, -0.5, -1.5, 1000.0, -1000.0, 0.49};
    std::vector<int8_t> q(x.size());
    k::scalar::quantize_int8(x.data(), x.size(), 1.0, 0, q.data());
    CHECK(q == std::vector<int8_t>{0, 2, 2, 0, -2, 127, -128, 0});
    if (k::avx2_supported()) {
      std::vector<int8_t> q2(x.size());
      k::avx2::quantize_int8(x.data(), x.size(), 1.0, 0, q2.data());
      CHECK(q2 == q);
    }
  }

  TEST_CASE("dispatch can be pinned to the scalar path") {
    const k::Isa before = k::active_isa();
    REQUIRE(k::set_isa(k::Isa::kScalar));
    CHECK(k::active_isa() == k::Isa::kScalar);
    const std::vector<double> a = {1, 2, 3};
    const std::vector<double> b = {4, 5, 6};
    CHECK(k::dot(a, b) == 32.0);
    CHECK(k::squared_distance(a, b) == 27.0);
    k::set_isa(before);
    CHECK(k::active_isa() == before);
  }
}

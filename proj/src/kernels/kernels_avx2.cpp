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

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "sr/kernels/kernels.hpp"

#define SR_AVX2 __attribute__((target("avx2,fma")))

namespace sr::kernels::avx2 {
namespace {

SR_AVX2 inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

SR_AVX2 double dot(const double* a, const double* b, size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

SR_AVX2 void axpy(double alpha, const double* x, double* y, size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

SR_AVX2 double squared_distance(const double* a, const double* b, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

SR_AVX2 void dequantize_int8(const int8_t* q, size_t n, double scale, int32_t zp, double* out) {
  const __m256d vs = _mm256_set1_pd(scale);
  const __m128i vzp = _mm_set1_epi32(zp);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    int32_t packed;
    std::memcpy(&packed, q + i, sizeof(packed));
    const __m128i w = _mm_sub_epi32(_mm_cvtepi8_epi32(_mm_cvtsi32_si128(packed)), vzp);
    // Exact: int32 -> double is lossless, then one rounded multiply like the scalar path.
    _mm256_storeu_pd(out + i, _mm256_mul_pd(vs, _mm256_cvtepi32_pd(w)));
  }
  for (; i < n; ++i) {
    out[i] = scale * static_cast<double>(static_cast<int32_t>(q[i]) - zp);
  }
}

SR_AVX2 void quantize_int8(const double* x, size_t n, double scale, int32_t zp, int8_t* q) {
  const __m256d vs = _mm256_set1_pd(scale);
  const __m256d vzp = _mm256_set1_pd(static_cast<double>(zp));
  const __m256d lo = _mm256_set1_pd(-128.0);
  const __m256d hi = _mm256_set1_pd(127.0);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_div_pd(_mm256_loadu_pd(x + i), vs);
    v = _mm256_round_pd(v, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    v = _mm256_add_pd(v, vzp);
    v = _mm256_min_pd(_mm256_max_pd(v, lo), hi);
    alignas(16) int32_t tmp[4];
    _mm_store_si128(reinterpret_cast<__m128i*>(tmp), _mm256_cvtpd_epi32(v));
    for (int k = 0; k < 4; ++k) q[i + k] = static_cast<int8_t>(tmp[k]);
  }
  for (; i < n; ++i) {
    double v = std::nearbyint(x[i] / scale) + static_cast<double>(zp);
    v = std::clamp(v, -128.0, 127.0);
    q[i] = static_cast<int8_t>(v);
  }
}

}  // namespace sr::kernels::avx2

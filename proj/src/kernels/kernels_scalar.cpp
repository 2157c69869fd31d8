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

#include <algorithm>
#include <cmath>

#include "sr/kernels/kernels.hpp"

namespace sr::kernels::scalar {

double dot(const double* a, const double* b, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double squared_distance(const double* a, const double* b, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void dequantize_int8(const int8_t* q, size_t n, double scale, int32_t zp, double* out) {
  for (size_t i = 0; i < n; ++i) {
    out[i] = scale * static_cast<double>(static_cast<int32_t>(q[i]) - zp);
  }
}

void quantize_int8(const double* x, size_t n, double scale, int32_t zp, int8_t* q) {
  for (size_t i = 0; i < n; ++i) {
    double v = std::nearbyint(x[i] / scale) + static_cast<double>(zp);
    v = std::clamp(v, -128.0, 127.0);
    q[i] = static_cast<int8_t>(v);
  }
}

}  // namespace sr::kernels::scalar

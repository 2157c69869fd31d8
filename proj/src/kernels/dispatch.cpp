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

#include <cassert>
#include <cstdlib>
#include <string_view>

#include "sr/kernels/kernels.hpp"

namespace sr::kernels {
namespace {

struct Table {
  double (*dot)(const double*, const double*, size_t);
  void (*axpy)(double, const double*, double*, size_t);
  double (*squared_distance)(const double*, const double*, size_t);
  void (*dequantize_int8)(const int8_t*, size_t, double, int32_t, double*);
  void (*quantize_int8)(const double*, size_t, double, int32_t, int8_t*);
};

constexpr Table kScalar{scalar::dot, scalar::axpy, scalar::squared_distance,
                        scalar::dequantize_int8, scalar::quantize_int8};
constexpr Table kAvx2{avx2::dot, avx2::axpy, avx2::squared_distance,
                      avx2::dequantize_int8, avx2::quantize_int8};

bool detect_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() {
  const char* env = std::getenv("SR_KERNELS");
  if (env != nullptr && std::string_view(env) == "scalar") return Isa::kScalar;
  return detect_avx2() ? Isa::kAvx2 : Isa::kScalar;
}

Isa g_isa = initial_isa();
const Table* g_table = g_isa == Isa::kAvx2 ? &kAvx2 : &kScalar;

}  // namespace

bool avx2_supported() {
  static const bool supported = detect_avx2();
  return supported;
}

Isa active_isa() { return g_isa; }

bool set_isa(Isa isa) {
  if (isa == Isa::kAvx2 && !avx2_supported()) return false;
  g_isa = isa;
  g_table = isa == Isa::kAvx2 ? &kAvx2 : &kScalar;
  return true;
}

std::string_view isa_name(Isa isa) { return isa == Isa::kAvx2 ? "avx2" : "scalar"; }

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return g_table->dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  g_table->axpy(alpha, x.data(), y.data(), x.size());
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return g_table->squared_distance(a.data(), b.data(), a.size());
}

void dequantize_int8(std::span<const int8_t> q, double scale, int32_t zero_point,
                     std::span<double> out) {
  assert(q.size() == out.size());
  g_table->dequantize_int8(q.data(), q.size(), scale, zero_point, out.data());
}

void quantize_int8(std::span<const double> x, double scale, int32_t zero_point,
                   std::span<int8_t> q) {
  assert(x.size() == q.size());
  g_table->quantize_int8(x.data(), x.size(), scale, zero_point, q.data());
}

}  // namespace sr::kernels

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

// Data-parallel inner loops shared by the network, clustering and
// quantization code. Every kernel has a portable scalar reference
// implementation and an AVX2/FMA variant; the variant is chosen once at
// startup from CPUID and can be pinned with set_isa() or the SR_KERNELS=scalar
// environment variable.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace sr::kernels {

enum class Isa { kScalar, kAvx2 };

bool avx2_supported();
Isa active_isa();
// Returns false (and leaves the selection unchanged) if the ISA is not
// supported on this CPU.
bool set_isa(Isa isa);
std::string_view isa_name(Isa isa);

double dot(std::span<const double> a, std::span<const double> b);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double squared_distance(std::span<const double> a, std::span<const double> b);
// out[i] = scale * (q[i] - zero_point)
void dequantize_int8(std::span<const int8_t> q, double scale, int32_t zero_point,
                     std::span<double> out);
// q[i] = clamp(round_half_even(x[i] / scale) + zero_point, -128, 127)
void quantize_int8(std::span<const double> x, double scale, int32_t zero_point,
                   std::span<int8_t> q);

// Direct access to each implementation, for equivalence tests and benchmarks.
namespace scalar {
double dot(const double* a, const double* b, size_t n);
void axpy(double alpha, const double* x, double* y, size_t n);
double squared_distance(const double* a, const double* b, size_t n);
void dequantize_int8(const int8_t* q, size_t n, double scale, int32_t zp, double* out);
void quantize_int8(const double* x, size_t n, double scale, int32_t zp, int8_t* q);
}  // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, size_t n);
void axpy(double alpha, const double* x, double* y, size_t n);
double squared_distance(const double* a, const double* b, size_t n);
void dequantize_int8(const int8_t* q, size_t n, double scale, int32_t zp, double* out);
void quantize_int8(const double* x, size_t n, double scale, int32_t zp, int8_t* q);
}  // namespace avx2

}  // namespace sr::kernels

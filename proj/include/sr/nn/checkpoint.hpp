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

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sr/common/matrix.hpp"
#include "sr/nn/parameters.hpp"

namespace sr::nn {

enum class DType : uint8_t { kF32 = 0, kI8 = 1, kI32 = 2 };

// One named tensor. Exactly one payload vector is populated, matching dtype.
// Quantized payloads dequantize as scale * (q - zero_point).
struct TensorRecord {
  std::string name;
  DType dtype = DType::kF32;
  uint32_t rows = 0;
  uint32_t cols = 0;
  std::vector<float> f32;
  std::vector<int8_t> i8;
  std::vector<int32_t> i32;
  float scale = 1.0f;
  int32_t zero_point = 0;

  size_t count() const { return static_cast<size_t>(rows) * cols; }
  Mat to_mat() const;
};

TensorRecord float_record(const std::string& name, const Mat& m);

// File layout (little-endian): magic "SRENC1", u32 JSON length, JSON metadata,
// u32 tensor count, then per tensor: u16 name length, name, u8 dtype, u8 rank
// (always 2), u32 rows, u32 cols, [f32 scale, i32 zero_point for quantized
// dtypes], payload.
struct Checkpoint {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<TensorRecord> tensors;

  const TensorRecord* find(std::string_view name) const;
  const TensorRecord& at(std::string_view name) const;
};

std::vector<uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const uint8_t> bytes);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Appends every parameter of the store as an f32 tensor.
void append_parameters(Checkpoint& ckpt, const ParameterStore& store);
// Copies tensors into same-named parameters; a missing tensor or a shape
// mismatch raises FormatError(kShapeMismatch).
void restore_parameters(const Checkpoint& ckpt, ParameterStore& store);

}  // namespace sr::nn

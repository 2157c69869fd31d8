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

#include "sr/nn/checkpoint.hpp"

#include "sr/common/binary_io.hpp"
#include "sr/common/error.hpp"

namespace sr::nn {
namespace {

constexpr std::string_view kMagic = "SRENC1";

}  // namespace

Mat TensorRecord::to_mat() const {
  Mat m(static_cast<int>(rows), static_cast<int>(cols));
  switch (dtype) {
    case DType::kF32:
      for (size_t i = 0; i < m.size(); ++i) m.data[i] = f32[i];
      break;
    case DType::kI8:
      for (size_t i = 0; i < m.size(); ++i) m.data[i] = static_cast<double>(scale) * (i8[i] - zero_point);
      break;
    case DType::kI32:
      for (size_t i = 0; i < m.size(); ++i) {
        m.data[i] = static_cast<double>(scale) * (static_cast<double>(i32[i]) - zero_point);
      }
      break;
  }
  return m;
}

TensorRecord float_record(const std::string& name, const Mat& m) {
  TensorRecord t;
  t.name = name;
  t.rows = static_cast<uint32_t>(m.rows);
  t.cols = static_cast<uint32_t>(m.cols);
  t.f32.assign(m.data.begin(), m.data.end());
  return t;
}

const TensorRecord* Checkpoint::find(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const TensorRecord& Checkpoint::at(std::string_view name) const {
  const TensorRecord* t = find(name);
  if (t == nullptr) {
    throw FormatError(FormatError::Code::kShapeMismatch, "missing tensor " + std::string(name));
  }
  return *t;
}

std::vector<uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  ByteWriter w;
  w.bytes(kMagic);
  const std::string meta = ckpt.meta.dump();
  w.u32(static_cast<uint32_t>(meta.size()));
  w.bytes(meta);
  w.u32(static_cast<uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    w.str16(t.name);
    w.u8(static_cast<uint8_t>(t.dtype));
    w.u8(2);
    w.u32(t.rows);
    w.u32(t.cols);
    switch (t.dtype) {
      case DType::kF32:
        if (t.f32.size() != t.count()) throw Error("tensor payload size mismatch: " + t.name);
        for (float v : t.f32) w.f32(v);
        break;
      case DType::kI8:
        if (t.i8.size() != t.count()) throw Error("tensor payload size mismatch: " + t.name);
        w.f32(t.scale);
        w.i32(t.zero_point);
        for (int8_t v : t.i8) w.u8(static_cast<uint8_t>(v));
        break;
      case DType::kI32:
        if (t.i32.size() != t.count()) throw Error("tensor payload size mismatch: " + t.name);
        w.f32(t.scale);
        w.i32(t.zero_point);
        for (int32_t v : t.i32) w.i32(v);
        break;
    }
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.remaining() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) {
    throw FormatError(FormatError::Code::kBadMagic, "not a checkpoint (bad magic)");
  }
  Checkpoint ckpt;
  const uint32_t meta_len = r.u32();
  const std::string_view meta = r.bytes(meta_len);
  try {
    ckpt.meta = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatError::Code::kCorrupt, std::string("checkpoint metadata: ") + e.what());
  }
  const uint32_t n = r.u32();
  for (uint32_t i = 0; i < n; ++i) {
    TensorRecord t;
    t.name = r.str16();
    const uint8_t dtype = r.u8();
    if (dtype > 2) throw FormatError(FormatError::Code::kCorrupt, "unknown dtype in " + t.name);
    t.dtype = static_cast<DType>(dtype);
    if (r.u8() != 2) throw FormatError(FormatError::Code::kCorrupt, "unsupported rank in " + t.name);
    t.rows = r.u32();
    t.cols = r.u32();
    const size_t count = t.count();
    if (t.dtype != DType::kF32) {
      t.scale = r.f32();
      t.zero_point = r.i32();
    }
    const size_t width = t.dtype == DType::kI8 ? 1 : 4;
    if (count > r.remaining() / width) {
      throw FormatError(FormatError::Code::kTruncated, "truncated tensor " + t.name);
    }
    switch (t.dtype) {
      case DType::kF32:
        t.f32.resize(count);
        for (auto& v : t.f32) v = r.f32();
        break;
      case DType::kI8:
        t.i8.resize(count);
        for (auto& v : t.i8) v = static_cast<int8_t>(r.u8());
        break;
      case DType::kI32:
        t.i32.resize(count);
        for (auto& v : t.i32) v = r.i32();
        break;
    }
    ckpt.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw FormatError(FormatError::Code::kCorrupt, "trailing bytes after checkpoint");
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  write_file_bytes(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(read_file_bytes(path)); }

void append_parameters(Checkpoint& ckpt, const ParameterStore& store) {
  for (const auto& p : store.all()) ckpt.tensors.push_back(float_record(p->name, p->value));
}

void restore_parameters(const Checkpoint& ckpt, ParameterStore& store) {
  for (const auto& p : store.all()) {
    const TensorRecord& t = ckpt.at(p->name);
    if (static_cast<int>(t.rows) != p->value.rows || static_cast<int>(t.cols) != p->value.cols) {
      throw FormatError(FormatError::Code::kShapeMismatch,
                        "shape mismatch for " + p->name + ": checkpoint " + std::to_string(t.rows) +
                            "x" + std::to_string(t.cols) + ", model " + std::to_string(p->value.rows) +
                            "x" + std::to_string(p->value.cols));
    }
    p->value = t.to_mat();
  }
}

}  // namespace sr::nn

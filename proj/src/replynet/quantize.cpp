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

#include "sr/replynet/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sr/common/error.hpp"
#include "sr/kernels/kernels.hpp"

namespace sr::replynet {
namespace {

// Nearest float not below v, so the quantized grid still spans the range.
double float_scale_up(double v) {
  float f = static_cast<float>(v);
  if (static_cast<double>(f) < v) f = std::nextafter(f, std::numeric_limits<float>::infinity());
  return f;
}

}  // namespace

QuantParams choose_int8_params(double lo, double hi) {
  QuantParams p;
  if (lo == hi && lo != 0.0) {
    // constant tensor: one step of size |c| represents it exactly
    p.scale = float_scale_up(std::abs(lo));
    p.zero_point = lo > 0.0 ? -128 : 127;
    return p;
  }
  lo = std::min(lo, 0.0);
  hi = std::max(hi, 0.0);
  p.scale = float_scale_up(std::max((hi - lo) / 255.0, kMinScale));
  const double zp = std::nearbyint(-128.0 - lo / p.scale);
  p.zero_point = static_cast<int32_t>(std::clamp(zp, -128.0, 127.0));
  return p;
}

QuantParams choose_int8_params(std::span<const double> values) {
  if (values.empty()) return choose_int8_params(0.0, 0.0);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return choose_int8_params(*lo, *hi);
}

nn::TensorRecord quantize_int8_tensor(const std::string& name, const Mat& m) {
  const QuantParams p = choose_int8_params(m.data);
  nn::TensorRecord t;
  t.name = name;
  t.dtype = nn::DType::kI8;
  t.rows = static_cast<uint32_t>(m.rows);
  t.cols = static_cast<uint32_t>(m.cols);
  t.scale = static_cast<float>(p.scale);
  t.zero_point = p.zero_point;
  t.i8.resize(m.size());
  kernels::quantize_int8(m.data, p.scale, p.zero_point, t.i8);
  return t;
}

nn::TensorRecord quantize_int32_tensor(const std::string& name, const Mat& m) {
  double max_abs = 0.0;
  for (double v : m.data) max_abs = std::max(max_abs, std::abs(v));
  const double scale = float_scale_up(max_abs > 0.0 ? max_abs / 2147483520.0 : kMinScale);
  nn::TensorRecord t;
  t.name = name;
  t.dtype = nn::DType::kI32;
  t.rows = static_cast<uint32_t>(m.rows);
  t.cols = static_cast<uint32_t>(m.cols);
  t.scale = static_cast<float>(scale);
  t.zero_point = 0;
  t.i32.reserve(m.size());
  for (double v : m.data) {
    const double q = std::clamp(std::nearbyint(v / scale), -2147483648.0, 2147483647.0);
    t.i32.push_back(static_cast<int32_t>(q));
  }
  return t;
}

void fake_quantize(Mat& m, const QuantParams& p) {
  std::vector<int8_t> q(m.size());
  kernels::quantize_int8(m.data, p.scale, p.zero_point, q);
  kernels::dequantize_int8(q, p.scale, p.zero_point, m.data);
}

bool is_bias_tensor(std::string_view name) {
  const size_t dot = name.rfind('.');
  if (dot == std::string_view::npos) return false;
  return dot + 1 < name.size() && name[dot + 1] == 'b';
}

void ActivationRanges::observe(std::string_view site, const Mat& m) {
  if (m.empty()) return;
  const auto [lo, hi] = std::minmax_element(m.data.begin(), m.data.end());
  auto it = ranges_.find(site);
  if (it == ranges_.end()) {
    ranges_.emplace(std::string(site), std::make_pair(*lo, *hi));
  } else {
    it->second.first = std::min(it->second.first, *lo);
    it->second.second = std::max(it->second.second, *hi);
  }
}

std::optional<std::pair<double, double>> ActivationRanges::find(std::string_view site) const {
  const auto it = ranges_.find(site);
  if (it == ranges_.end()) return std::nullopt;
  return it->second;
}

nlohmann::json ActivationRanges::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [site, r] : ranges_) j[site] = {r.first, r.second};
  return j;
}

ActivationRanges ActivationRanges::from_json(const nlohmann::json& j) {
  ActivationRanges r;
  for (const auto& [site, v] : j.items()) {
    r.ranges_.emplace(site, std::make_pair(v.at(0).get<double>(), v.at(1).get<double>()));
  }
  return r;
}

embedder::ActivationHook recording_hook(ActivationRanges& ranges) {
  return [&ranges](std::string_view site, Mat& m) { ranges.observe(site, m); };
}

embedder::ActivationHook fake_quant_hook(ActivationRanges ranges) {
  std::map<std::string, QuantParams, std::less<>> params;
  for (const auto& [site, r] : ranges.ranges()) params.emplace(site, choose_int8_params(r.first, r.second));
  return [params = std::move(params)](std::string_view site, Mat& m) {
    const auto it = params.find(site);
    if (it != params.end()) fake_quantize(m, it->second);
  };
}

nn::Checkpoint quantize_checkpoint(const nn::Checkpoint& float_ckpt, const ActivationRanges& ranges) {
  nn::Checkpoint q;
  q.meta = float_ckpt.meta;
  q.meta["quantized"] = true;
  q.meta["activation_ranges"] = ranges.to_json();
  for (const auto& t : float_ckpt.tensors) {
    if (t.dtype != nn::DType::kF32) throw Error("checkpoint is already quantized: " + t.name);
    const Mat m = t.to_mat();
    q.tensors.push_back(is_bias_tensor(t.name) ? quantize_int32_tensor(t.name, m) : quantize_int8_tensor(t.name, m));
  }
  return q;
}

}  // namespace sr::replynet

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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "json.hpp"
#include "sr/common/matrix.hpp"
#include "sr/embedder/encoder.hpp"
#include "sr/nn/checkpoint.hpp"

namespace sr::replynet {

inline constexpr double kMinScale = 1e-8;

// Per-tensor affine int8 parameters: value = scale * (q - zero_point). The
// range always includes 0 so zero is exact. scale is rounded up to f32 so the
// stored and in-memory parameters agree. A nonzero constant tensor gets
// scale |c| instead, which represents it exactly.
struct QuantParams {
  double scale = 1.0;
  int32_t zero_point = 0;
};

QuantParams choose_int8_params(double lo, double hi);
QuantParams choose_int8_params(std::span<const double> values);

nn::TensorRecord quantize_int8_tensor(const std::string& name, const Mat& m);
// Symmetric int32 quantization (zero point 0) for bias vectors.
nn::TensorRecord quantize_int32_tensor(const std::string& name, const Mat& m);

// Round trip through the int8 quantizer, in place.
void fake_quantize(Mat& m, const QuantParams& p);

// Biases are tensors whose last name component starts with 'b'
// ("cnn.b0", "tf.l0.bq", "head.b").
bool is_bias_tensor(std::string_view name);

// Observed [min, max] per activation site.
class ActivationRanges {
 public:
  void observe(std::string_view site, const Mat& m);
  bool empty() const { return ranges_.empty(); }
  const std::map<std::string, std::pair<double, double>, std::less<>>& ranges() const { return ranges_; }
  std::optional<std::pair<double, double>> find(std::string_view site) const;

  nlohmann::json to_json() const;
  static ActivationRanges from_json(const nlohmann::json& j);

 private:
  std::map<std::string, std::pair<double, double>, std::less<>> ranges_;
};

// Hook recording ranges into `ranges` (which must outlive the hook).
embedder::ActivationHook recording_hook(ActivationRanges& ranges);
// Hook fake-quantizing every calibrated site; unknown sites pass through.
embedder::ActivationHook fake_quant_hook(ActivationRanges ranges);

// int8 weights, int32 biases, activation ranges stored in the metadata.
nn::Checkpoint quantize_checkpoint(const nn::Checkpoint& float_ckpt, const ActivationRanges& ranges);

}  // namespace sr::replynet

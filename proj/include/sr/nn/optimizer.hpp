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

#include <unordered_map>
#include <vector>

#include "sr/nn/parameters.hpp"

namespace sr::nn {

enum class OptimizerKind { kAdam, kRmsprop };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double rho = 0.9;  // RMSprop moving-average factor
  double eps = 1e-8;
  // Elementwise gradient clip applied before every update; <= 0 disables.
  double clip_value = 5.0;
  // Step-exponential decay: lr * decay_rate^(step / decay_steps). 0 disables.
  long decay_steps = 0;
  double decay_rate = 0.95;
};

// Clamps every gradient entry to [-clip, clip].
void clip_gradients(const std::vector<Parameter*>& params, double clip);

class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);

  // Clips, applies one update to trainable parameters, then zeroes gradients.
  void step(const std::vector<Parameter*>& params);

  double current_learning_rate() const;
  long steps() const { return steps_; }
  const OptimizerConfig& config() const { return config_; }

 private:
  struct Slot {
    std::vector<double> m;
    std::vector<double> v;
  };

  OptimizerConfig config_;
  long steps_ = 0;
  std::unordered_map<const Parameter*, Slot> slots_;
};

}  // namespace sr::nn

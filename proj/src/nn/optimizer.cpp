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

#include "sr/nn/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "sr/common/error.hpp"

namespace sr::nn {

void clip_gradients(const std::vector<Parameter*>& params, double clip) {
  if (clip <= 0.0) return;
  for (Parameter* p : params) {
    for (double& g : p->grad.data) g = std::clamp(g, -clip, clip);
  }
}

Optimizer::Optimizer(OptimizerConfig config) : config_(config) {
  if (!(config_.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (config_.decay_steps < 0) throw ConfigError("decay_steps must be >= 0");
}

double Optimizer::current_learning_rate() const {
  if (config_.decay_steps == 0) return config_.learning_rate;
  return config_.learning_rate *
         std::pow(config_.decay_rate, static_cast<double>(steps_ / config_.decay_steps));
}

void Optimizer::step(const std::vector<Parameter*>& params) {
  clip_gradients(params, config_.clip_value);
  const double lr = current_learning_rate();
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double bc1 = 1.0 - std::pow(config_.beta1, t);
  const double bc2 = 1.0 - std::pow(config_.beta2, t);
  for (Parameter* p : params) {
    if (!p->trainable) continue;
    Slot& s = slots_[p];
    const size_t n = p->value.size();
    if (s.v.size() != n) {
      s.m.assign(n, 0.0);
      s.v.assign(n, 0.0);
    }
    double* w = p->value.data.data();
    double* g = p->grad.data.data();
    if (config_.kind == OptimizerKind::kAdam) {
      for (size_t i = 0; i < n; ++i) {
        s.m[i] = config_.beta1 * s.m[i] + (1.0 - config_.beta1) * g[i];
        s.v[i] = config_.beta2 * s.v[i] + (1.0 - config_.beta2) * g[i] * g[i];
        w[i] -= lr * (s.m[i] / bc1) / (std::sqrt(s.v[i] / bc2) + config_.eps);
      }
    } else {
      for (size_t i = 0; i < n; ++i) {
        s.v[i] = config_.rho * s.v[i] + (1.0 - config_.rho) * g[i] * g[i];
        w[i] -= lr * g[i] / (std::sqrt(s.v[i]) + config_.eps);
      }
    }
    std::fill(p->grad.data.begin(), p->grad.data.end(), 0.0);
  }
}

}  // namespace sr::nn

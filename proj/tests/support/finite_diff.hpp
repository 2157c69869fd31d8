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

// Central finite-difference oracle for gradient checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "sr/nn/parameters.hpp"

namespace sr::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "param[index]" of the worst element
  size_t checked = 0;
};

// Relative error |a - n| / max(|a|, |n|, floor).
inline double rel_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// analytic: gradients already accumulated in each Parameter::grad.
// loss: re-evaluates the scalar loss from the current parameter values.
inline GradCheckResult check_gradients(const std::vector<nn::Parameter*>& params,
                                       const std::function<double()>& loss, double eps = 1e-4,
                                       double floor = 1e-6) {
  GradCheckResult r;
  for (nn::Parameter* p : params) {
    for (size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value.data[i];
      p->value.data[i] = saved + eps;
      const double up = loss();
      p->value.data[i] = saved - eps;
      const double down = loss();
      p->value.data[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double e = rel_error(p->grad.data[i], numeric, floor);
      ++r.checked;
      if (e > r.max_rel_error) {
        r.max_rel_error = e;
        r.worst = p->name + "[" + std::to_string(i) + "] analytic=" + std::to_string(p->grad.data[i]) +
                  " numeric=" + std::to_string(numeric);
      }
    }
  }
  return r;
}

}  // namespace sr::testing

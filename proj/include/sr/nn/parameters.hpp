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

#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sr/common/matrix.hpp"
#include "sr/common/rng.hpp"

namespace sr::nn {

struct Parameter {
  std::string name;
  Mat value;
  // Gradient accumulator; written during backward passes over const models.
  mutable Mat grad;
  bool trainable = true;
};

// Ordered, name-indexed collection of parameters. Addresses are stable.
class ParameterStore {
 public:
  Parameter& add(std::string name, int rows, int cols);

  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;
  const Parameter* find(std::string_view name) const;

  const std::vector<std::unique_ptr<Parameter>>& all() const { return params_; }
  std::vector<Parameter*> pointers() const;

  void zero_grad();
  size_t num_values() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, size_t> index_;
};

// Glorot-uniform fill.
void init_glorot(Mat& m, Rng& rng);
void init_normal(Mat& m, Rng& rng, double stddev);

}  // namespace sr::nn

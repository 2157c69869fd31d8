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

#include "sr/nn/parameters.hpp"

#include <cmath>

#include "sr/common/error.hpp"

namespace sr::nn {

Parameter& ParameterStore::add(std::string name, int rows, int cols) {
  if (index_.contains(name)) throw ConfigError("duplicate parameter: " + name);
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Mat(rows, cols);
  p->grad = Mat(rows, cols);
  index_.emplace(std::move(name), params_.size());
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParameterStore::at(std::string_view name) {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) throw Error("unknown parameter: " + std::string(name));
  return *params_[it->second];
}

const Parameter& ParameterStore::at(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) throw Error("unknown parameter: " + std::string(name));
  return *params_[it->second];
}

const Parameter* ParameterStore::find(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : params_[it->second].get();
}

std::vector<Parameter*> ParameterStore::pointers() const {
  std::vector<Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) std::fill(p->grad.data.begin(), p->grad.data.end(), 0.0);
}

size_t ParameterStore::num_values() const {
  size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void init_glorot(Mat& m, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(m.rows + m.cols));
  for (auto& x : m.data) x = rng.uniform(-limit, limit);
}

void init_normal(Mat& m, Rng& rng, double stddev) {
  for (auto& x : m.data) x = stddev * rng.normal();
}

}  // namespace sr::nn

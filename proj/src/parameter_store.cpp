// Copyright 2026 The SceneForge Authors.
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

#include "sceneforge/parameter_store.hpp"

#include "sceneforge/error.hpp"

namespace sceneforge {

Parameter& ParameterStore::Insert(const std::string& name, Tensor value, bool trainable) {
  Require(!name.empty(), ErrorKind::kRegistry, "empty parameter name");
  Require(!Contains(name), ErrorKind::kRegistry, "duplicate parameter '" + name + "'");
  Parameter p;
  p.grad = Tensor(value.dims(), 0.0);
  p.value = std::move(value);
  p.trainable = trainable;
  return params_.emplace(name, std::move(p)).first->second;
}

Tensor& ParameterStore::Gaussian(const std::string& name, const Shape& dims, double stddev) {
  Require(!Contains(name), ErrorKind::kRegistry, "duplicate parameter '" + name + "'");
  Tensor value(dims);
  std::normal_distribution<double> normal(0.0, stddev);
  for (auto& v : value.data()) v = normal(rng_);
  return Insert(name, std::move(value), true).value;
}

Tensor& ParameterStore::Zeros(const std::string& name, const Shape& dims) {
  return Insert(name, Tensor(dims, 0.0), true).value;
}

Tensor& ParameterStore::Ones(const std::string& name, const Shape& dims) {
  return Insert(name, Tensor(dims, 1.0), true).value;
}

Tensor& ParameterStore::Add(const std::string& name, Tensor value, bool trainable) {
  return Insert(name, std::move(value), trainable).value;
}

Parameter& ParameterStore::Get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) Fail(ErrorKind::kRegistry, "unknown parameter '" + name + "'");
  return it->second;
}

const Parameter& ParameterStore::Get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) Fail(ErrorKind::kRegistry, "unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParameterStore::TrainableCount() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p.trainable ? 1 : 0;
  return n;
}

void ParameterStore::ZeroGrad() {
  for (auto& [name, p] : params_) p.grad.Fill(0.0);
  grads_ready_ = false;
}

}  // namespace sceneforge

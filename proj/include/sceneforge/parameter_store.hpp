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

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "sceneforge/kernels.hpp"
#include "sceneforge/tensor.hpp"

namespace sceneforge {

inline constexpr double kDefaultInitStd = 0.02;

struct Parameter {
  Tensor value;
  Tensor grad;  // same dims as value; zero-filled for frozen entries too
  bool trainable = true;
};

/// Named registry of model parameters.
///
/// Iteration is sorted by name. All random initialization draws from a
/// single generator seeded at construction, so two stores built with the same
/// seed and the same registration sequence hold bit-identical values.
class ParameterStore {
 public:
  explicit ParameterStore(std::uint64_t seed = 0) : seed_(seed), rng_(seed) {}

  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  /// Registers i.i.d. Normal(0, stddev^2) entries. Throws a registry error
  /// if `name` already exists.
  Tensor& Gaussian(const std::string& name, const Shape& dims, double stddev = kDefaultInitStd);
  Tensor& Zeros(const std::string& name, const Shape& dims);
  Tensor& Ones(const std::string& name, const Shape& dims);
  Tensor& Add(const std::string& name, Tensor value, bool trainable = true);

  bool Contains(const std::string& name) const { return params_.count(name) != 0; }
  Parameter& Get(const std::string& name);
  const Parameter& Get(const std::string& name) const;

  std::map<std::string, Parameter>& entries() { return params_; }
  const std::map<std::string, Parameter>& entries() const { return params_; }
  std::size_t size() const { return params_.size(); }
  std::size_t TrainableCount() const;

  void ZeroGrad();
  // Set by gradient accumulation, cleared by ZeroGrad; the optimizer refuses
  // to step without it.
  bool grads_ready() const { return grads_ready_; }
  void MarkGradsReady() { grads_ready_ = true; }
  void ClearGradsReady() { grads_ready_ = false; }

  std::uint64_t seed() const { return seed_; }
  Rng& rng() { return rng_; }

 private:
  Parameter& Insert(const std::string& name, Tensor value, bool trainable);

  std::uint64_t seed_;
  Rng rng_;
  std::map<std::string, Parameter> params_;
  bool grads_ready_ = false;
};

}  // namespace sceneforge

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

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>

#include "sceneforge/config.hpp"
#include "sceneforge/parameter_store.hpp"

namespace sceneforge {

struct AdamOptions {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;

  static AdamOptions From(const Config& c) {
    return {c.lr, c.adam_beta1, c.adam_beta2, c.adam_eps, c.weight_decay};
  }
};

struct AdamMoments {
  Tensor m;
  Tensor v;
};

/// Everything besides parameter values needed to resume training.
struct TrainState {
  std::size_t epoch = 0;  // completed epochs
  std::uint64_t step = 0;  // optimizer steps taken
  double best_metric = -1.0;
  std::size_t best_epoch = 0;
  std::size_t patience_counter = 0;
  std::string rng_state;  // shuffle generator, textual std::mt19937_64 state
  std::map<std::string, AdamMoments> moments;

  bool operator==(const TrainState& other) const;
};

/// One AdamW update with decoupled weight decay:
///   theta *= 1 - lr * weight_decay
///   theta -= lr * m_hat / (sqrt(v_hat) + eps)
/// Frozen parameters are skipped. Throws a contract error unless gradients
/// were accumulated since the last ZeroGrad(); consumes them.
void AdamWStep(ParameterStore& store, TrainState& state, const AdamOptions& options);

}  // namespace sceneforge

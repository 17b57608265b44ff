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

#include "sceneforge/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sceneforge/error.hpp"

namespace sceneforge {

double EvaluateLoss(const LossBuilder& loss, ParameterStore& store, Mode mode,
                    std::uint64_t dropout_seed) {
  Graph graph(mode, dropout_seed);
  Var root = loss(graph, store);
  return graph.value(root).item();
}

GradCheckResult FiniteDiffCheck(const LossBuilder& loss, ParameterStore& store,
                                const GradCheckOptions& options) {
  const double base = EvaluateLoss(loss, store, options.mode, options.dropout_seed);
  const double again = EvaluateLoss(loss, store, options.mode, options.dropout_seed);
  Require(base == again, ErrorKind::kContract,
          "loss function is not deterministic (" + std::to_string(base) + " vs " +
              std::to_string(again) + ")");

  store.ZeroGrad();
  {
    Graph graph(options.mode, options.dropout_seed);
    Var root = loss(graph, store);
    Backward(graph, root, store);
  }

  Rng sampler(options.sample_seed);
  GradCheckResult result;
  for (auto& [name, param] : store.entries()) {
    if (!param.trainable) continue;
    std::vector<std::size_t> indices(param.value.size());
    std::iota(indices.begin(), indices.end(), 0);
    if (indices.size() > options.max_entries_per_param) {
      std::shuffle(indices.begin(), indices.end(), sampler);
      indices.resize(options.max_entries_per_param);
      std::sort(indices.begin(), indices.end());
    }
    for (std::size_t i : indices) {
      double& slot = param.value[i];
      const double original = slot;
      slot = original + options.step;
      const double plus = EvaluateLoss(loss, store, options.mode, options.dropout_seed);
      slot = original - options.step;
      const double minus = EvaluateLoss(loss, store, options.mode, options.dropout_seed);
      slot = original;
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double analytic = param.grad[i];
      const double err =
          std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      ++result.entries_checked;
      if (err > result.max_relative_error || result.worst_parameter.empty()) {
        result.max_relative_error = err;
        result.worst_parameter = name;
        result.worst_index = i;
        result.worst_analytic = analytic;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace sceneforge

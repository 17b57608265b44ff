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
#include <functional>
#include <string>

#include "sceneforge/graph.hpp"
#include "sceneforge/parameter_store.hpp"

namespace sceneforge {

// Builds a scalar loss into the graph it is handed.
using LossBuilder = std::function<Var(Graph&, ParameterStore&)>;

struct GradCheckOptions {
  double step = 1e-5;
  // Parameters larger than this are checked on a seeded random subset.
  std::size_t max_entries_per_param = 24;
  std::uint64_t sample_seed = 0;
  // Train mode is allowed: every evaluation rebuilds the graph with the same
  // dropout seed, so the mask is frozen.
  Mode mode = Mode::kEval;
  std::uint64_t dropout_seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t entries_checked = 0;
};

/// Compares reverse-mode gradients against central differences.
///
/// The per-entry error is |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
/// Throws a contract error when two evaluations at the same point disagree.
/// Parameter values are restored before returning; gradients are left holding
/// the analytic result.
GradCheckResult FiniteDiffCheck(const LossBuilder& loss, ParameterStore& store,
                                const GradCheckOptions& options = {});

double EvaluateLoss(const LossBuilder& loss, ParameterStore& store, Mode mode = Mode::kEval,
                    std::uint64_t dropout_seed = 0);

}  // namespace sceneforge

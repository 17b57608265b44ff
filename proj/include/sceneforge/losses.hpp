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
#include <span>
#include <vector>

#include "sceneforge/config.hpp"
#include "sceneforge/graph.hpp"
#include "sceneforge/model.hpp"

namespace sceneforge {

struct LossWeights {
  double beta_t = 1.0;
  double beta_nt = 1.0;
  double beta_distill = 1.0;
  double beta_level1 = 1.0;
  double beta_level2 = 1.0;

  static LossWeights From(const Config& c) {
    return {c.beta_t, c.beta_nt, c.beta_distill, c.beta_level1, c.beta_level2};
  }
  // The non-temporal branch only matters when one of its terms is weighted.
  bool needs_nontemporal() const { return beta_nt != 0.0 || beta_distill != 0.0; }
};

/// Mean of per-video multilabel cross entropy.
double MultiLabelCrossEntropyBatch(const std::vector<std::vector<double>>& scores,
                                   const std::vector<std::vector<std::uint8_t>>& positive);

/// beta_level1 * CE(refined1) + beta_level2 * CE(refined2) for one video.
Var StreamLoss(Graph& g, const ScoreSheet& sheet, std::span<const std::uint8_t> level1,
               std::span<const std::uint8_t> level2, const LossWeights& w);
double StreamLoss(const ScoreValues& sheet, std::span<const std::uint8_t> level1,
                  std::span<const std::uint8_t> level2, const LossWeights& w);

/// Weighted Euclidean distances between the refined scores of two sheets,
/// one video. Gradients reach both sheets.
Var DistillLoss(Graph& g, const ScoreSheet& a, const ScoreSheet& b, const LossWeights& w);
double DistillLoss(const ScoreValues& a, const ScoreValues& b, const LossWeights& w);
/// Batch mean of the per-video distillation loss.
double DistillLossBatch(const std::vector<ScoreValues>& a, const std::vector<ScoreValues>& b,
                        const LossWeights& w);

double TotalObjective(double temporal, double nontemporal, double distill, const LossWeights& w);
Var TotalObjective(Graph& g, Var temporal, Var nontemporal, Var distill, const LossWeights& w);

}  // namespace sceneforge

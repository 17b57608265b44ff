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

#include "sceneforge/losses.hpp"

#include <cmath>

#include "sceneforge/error.hpp"

namespace sceneforge {

namespace {

double Distance(const Tensor& a, const Tensor& b) {
  Require(a.size() == b.size(), ErrorKind::kDimension, "score sheets cover different label sets");
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(ss);
}

}  // namespace

double MultiLabelCrossEntropyBatch(const std::vector<std::vector<double>>& scores,
                                   const std::vector<std::vector<std::uint8_t>>& positive) {
  Require(!scores.empty() && scores.size() == positive.size(), ErrorKind::kContract,
          "batch cross entropy needs matching, non-empty score and label lists");
  double total = 0.0;
  for (std::size_t v = 0; v < scores.size(); ++v) {
    total += kernels::MultiLabelCrossEntropy(scores[v], positive[v]);
  }
  return total / static_cast<double>(scores.size());
}

Var StreamLoss(Graph& g, const ScoreSheet& s, std::span<const std::uint8_t> level1,
               std::span<const std::uint8_t> level2, const LossWeights& w) {
  return g.Add(g.Scale(g.MultiLabelCrossEntropy(s.refined1, level1), w.beta_level1),
               g.Scale(g.MultiLabelCrossEntropy(s.refined2, level2), w.beta_level2));
}

double StreamLoss(const ScoreValues& s, std::span<const std::uint8_t> level1,
                  std::span<const std::uint8_t> level2, const LossWeights& w) {
  return w.beta_level1 * kernels::MultiLabelCrossEntropy(s.refined1.data(), level1) +
         w.beta_level2 * kernels::MultiLabelCrossEntropy(s.refined2.data(), level2);
}

Var DistillLoss(Graph& g, const ScoreSheet& a, const ScoreSheet& b, const LossWeights& w) {
  return g.Add(g.Scale(g.Norm2(g.Sub(a.refined1, b.refined1)), w.beta_level1),
               g.Scale(g.Norm2(g.Sub(a.refined2, b.refined2)), w.beta_level2));
}

double DistillLoss(const ScoreValues& a, const ScoreValues& b, const LossWeights& w) {
  return w.beta_level1 * Distance(a.refined1, b.refined1) +
         w.beta_level2 * Distance(a.refined2, b.refined2);
}

double DistillLossBatch(const std::vector<ScoreValues>& a, const std::vector<ScoreValues>& b,
                        const LossWeights& w) {
  Require(!a.empty() && a.size() == b.size(), ErrorKind::kContract,
          "distillation needs two non-empty batches of equal size");
  double total = 0.0;
  for (std::size_t v = 0; v < a.size(); ++v) total += DistillLoss(a[v], b[v], w);
  return total / static_cast<double>(a.size());
}

double TotalObjective(double temporal, double nontemporal, double distill, const LossWeights& w) {
  return w.beta_t * temporal + w.beta_nt * nontemporal + w.beta_distill * distill;
}

Var TotalObjective(Graph& g, Var temporal, Var nontemporal, Var distill, const LossWeights& w) {
  return g.Add(g.Add(g.Scale(temporal, w.beta_t), g.Scale(nontemporal, w.beta_nt)),
               g.Scale(distill, w.beta_distill));
}

}  // namespace sceneforge

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

#include "sceneforge/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "sceneforge/error.hpp"

namespace sceneforge {

namespace {

double Ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

F1Result MicroF1(const LabelSets& predicted, const LabelSets& truth) {
  Require(predicted.size() == truth.size(), ErrorKind::kDimension,
          "prediction and truth cover different videos");
  F1Result r;
  for (std::size_t v = 0; v < truth.size(); ++v) {
    Require(predicted[v].size() == truth[v].size(), ErrorKind::kDimension,
            "prediction and truth cover different labels");
    for (std::size_t q = 0; q < truth[v].size(); ++q) {
      const bool p = predicted[v][q] != 0, t = truth[v][q] != 0;
      r.true_positives += p && t;
      r.false_positives += p && !t;
      r.false_negatives += !p && t;
    }
  }
  r.precision = Ratio(r.true_positives, r.true_positives + r.false_positives);
  r.recall = Ratio(r.true_positives, r.true_positives + r.false_negatives);
  r.f1 = Ratio(2 * r.true_positives, 2 * r.true_positives + r.false_positives + r.false_negatives);
  return r;
}

std::vector<std::uint8_t> SelectThreshold(const std::vector<double>& scores, double threshold) {
  std::vector<std::uint8_t> out(scores.size(), 0);
  for (std::size_t q = 0; q < scores.size(); ++q) out[q] = scores[q] >= threshold;
  return out;
}

std::vector<std::uint8_t> SelectTopK(const std::vector<double>& scores, std::size_t k) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::uint8_t> out(scores.size(), 0);
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i) out[order[i]] = 1;
  return out;
}

CoverageResult RpAtAccuracy(const std::vector<std::vector<double>>& scores, const LabelSets& truth,
                            double target) {
  Require(!scores.empty(), ErrorKind::kContract, "coverage of an empty prediction set");
  Require(scores.size() == truth.size(), ErrorKind::kDimension,
          "scores and truth cover different videos");
  const double inf = std::numeric_limits<double>::infinity();
  // At threshold t a video is labelled iff top >= t, and accurate iff also
  // wrong < t, where `wrong` is its best score outside the truth.
  std::vector<double> top(scores.size(), -inf), wrong(scores.size(), -inf);
  std::vector<double> candidates;
  for (std::size_t v = 0; v < scores.size(); ++v) {
    Require(scores[v].size() == truth[v].size(), ErrorKind::kDimension,
            "scores and truth cover different labels");
    for (std::size_t q = 0; q < scores[v].size(); ++q) {
      top[v] = std::max(top[v], scores[v][q]);
      if (!truth[v][q]) wrong[v] = std::max(wrong[v], scores[v][q]);
      candidates.push_back(scores[v][q]);
    }
  }
  std::sort(candidates.begin(), candidates.end(), std::greater<>());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  CoverageResult best;
  for (double t : candidates) {
    std::size_t labelled = 0, accurate = 0;
    for (std::size_t v = 0; v < scores.size(); ++v) {
      if (top[v] < t) continue;
      ++labelled;
      accurate += wrong[v] < t;
    }
    if (labelled == 0 || Ratio(accurate, labelled) < target) {
      continue;
    }
    const double coverage = Ratio(labelled, scores.size());
    if (coverage > best.coverage) best = {coverage, t, labelled, accurate};
  }
  return best;
}

}  // namespace sceneforge

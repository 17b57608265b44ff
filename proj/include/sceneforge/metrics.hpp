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
#include <limits>
#include <vector>

namespace sceneforge {

using LabelSets = std::vector<std::vector<std::uint8_t>>;  // [video][label] 0/1

struct F1Result {
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
};

/// Micro-averaged over every (video, label) pair. Rates with an empty
/// denominator are 0.
F1Result MicroF1(const LabelSets& predicted, const LabelSets& truth);

/// Labels with score >= threshold.
std::vector<std::uint8_t> SelectThreshold(const std::vector<double>& scores, double threshold);
/// The k highest scores; ties go to the lower index.
std::vector<std::uint8_t> SelectTopK(const std::vector<double>& scores, std::size_t k);

struct CoverageResult {
  double coverage = 0.0;
  double threshold = std::numeric_limits<double>::infinity();
  std::size_t labelled = 0;
  std::size_t accurate = 0;
};

/// Largest fraction of videos that stay labelled while accuracy among them
/// is at least `target`. A video is labelled at t when some score is >= t
/// and accurate when every such label is in its truth. Candidate t are the
/// distinct scores; ties in coverage keep the highest t. No qualifying t
/// gives (0, +inf). Throws a contract error on an empty set.
CoverageResult RpAtAccuracy(const std::vector<std::vector<double>>& scores, const LabelSets& truth,
                            double target = 0.9);

}  // namespace sceneforge

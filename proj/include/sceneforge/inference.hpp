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
#include <filesystem>
#include <string>
#include <vector>

#include "sceneforge/dataset.hpp"
#include "sceneforge/metrics.hpp"
#include "sceneforge/model.hpp"

namespace sceneforge {

struct Selection {
  enum class Kind { kThreshold, kTopK };
  Kind kind = Kind::kThreshold;
  double threshold = 0.0;
  std::size_t k = 1;

  static Selection Threshold(double t) { return {Kind::kThreshold, t, 1}; }
  static Selection TopK(std::size_t k) { return {Kind::kTopK, 0.0, k}; }
  std::vector<std::uint8_t> Apply(const std::vector<double>& scores) const;
  std::string Describe() const;
};

struct Prediction {
  std::string video_id;
  std::vector<double> level1_scores;  // refined
  std::vector<double> scores;         // refined level 2
  std::vector<std::uint8_t> selected;
};

/// Eval-mode temporal scoring of every example; the non-temporal branch is
/// never entered.
std::vector<Prediction> Infer(SceneModel& model, const std::vector<Example>& examples,
                              const Selection& selection, std::size_t threads = 1);

/// Eval-mode score sheets of one stream for every example.
enum class Stream { kTemporal, kNonTemporal };
std::vector<ScoreValues> ScoreExamples(SceneModel& model, const std::vector<Example>& examples,
                                       Stream stream, std::size_t threads = 1);

struct MetricReport {
  std::size_t videos = 0;
  std::size_t level1_labels = 0;
  std::size_t level2_labels = 0;
  std::string selection;
  F1Result level2;
  F1Result level1;
  CoverageResult rp90;
};

/// Level-2 micro-F1 of the selected sets, RP@90% over refined level-2
/// scores, and level-1 micro-F1 with the same selection rule.
MetricReport Evaluate(const std::vector<Prediction>& predictions, const std::vector<Example>& examples,
                      const Selection& selection);

/// `metric=value` lines.
std::string ReportText(const MetricReport& report);
std::string ReportJson(const MetricReport& report);

/// One JSON object per line: {video_id, selected: [names], scores: {name: score}}.
void WritePredictions(const std::filesystem::path& path, const std::vector<Prediction>& predictions,
                      const LabelHierarchy& hierarchy);

}  // namespace sceneforge

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
#include <functional>
#include <vector>

#include "sceneforge/dataset.hpp"
#include "sceneforge/losses.hpp"
#include "sceneforge/model.hpp"
#include "sceneforge/optimizer.hpp"

namespace sceneforge {

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double objective = 0.0;
  double temporal = 0.0;
  double nontemporal = 0.0;
  double distill = 0.0;
  double val_f1 = 0.0;
  // Mean per-video distance between the two streams' refined scores
  // (both levels concatenated) on the validation split, eval mode.
  double val_stream_distance = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::vector<double> step_objectives;
  std::size_t best_epoch = 0;
  double best_val_f1 = -1.0;
  bool stopped_early = false;
  double seconds = 0.0;
};

struct TrainOptions {
  // Best checkpoint destination; empty skips saving.
  std::filesystem::path checkpoint;
  std::function<void(const EpochStats&)> on_epoch;
};

struct ObjectiveParts {
  double objective = 0.0;
  double temporal = 0.0;
  double nontemporal = 0.0;
  double distill = 0.0;
};

/// Total objective of one video. The non-temporal stream is skipped when
/// neither its loss nor distillation is weighted.
Var VideoObjective(Graph& g, SceneModel& model, const Example& example, const LossWeights& weights,
                   ObjectiveParts* parts = nullptr);

/// Seeded mini-batch AdamW over both streams with early stopping on
/// validation micro-F1 (temporal refined level-2 scores, threshold 0).
/// Resumes from `state.epoch`. On return the model holds the best
/// parameters seen. A non-finite loss aborts with a numeric error naming
/// the first non-finite node.
TrainReport Train(SceneModel& model, const std::vector<Example>& train, const std::vector<Example>& val,
                  TrainState& state, const TrainOptions& options = {});

/// Per-video Euclidean distance between refined1 ++ refined2 of two sheets.
double StreamDistance(const ScoreValues& a, const ScoreValues& b);

}  // namespace sceneforge

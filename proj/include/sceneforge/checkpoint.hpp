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
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sceneforge/config.hpp"
#include "sceneforge/dataset.hpp"
#include "sceneforge/hierarchy.hpp"
#include "sceneforge/knowledge.hpp"
#include "sceneforge/model.hpp"
#include "sceneforge/optimizer.hpp"

// Checkpoint layout, all integers little-endian:
//   "SFCK", u8 version
//   u64 n, n bytes of JSON metadata {config, dims, hierarchy}
//   u64 epoch, u64 step, f64 best_metric, u64 best_epoch, u64 patience_counter
//   u32 n, n bytes of shuffle generator state
//   u32 count, then count index entries {u16 name length, name, u64 offset, u64 length}
//   the tensor blobs, each a KFT1 f64 record, at the indexed offsets
// Tensor names are "param/<name>", "adam_m/<name>" and "adam_v/<name>", sorted.
namespace sceneforge {

inline constexpr std::uint8_t kCheckpointVersion = 1;

struct Checkpoint {
  Config config;
  FeatureDims dims;
  LabelHierarchy hierarchy;
  TrainState state;
  std::map<std::string, Tensor> params;

  /// Snapshot of a model and its optimizer state.
  static Checkpoint Capture(const SceneModel& model, const TrainState& state);
};

std::vector<std::uint8_t> EncodeCheckpoint(const Checkpoint& checkpoint);
/// Throws truncation, version or format errors.
Checkpoint DecodeCheckpoint(const std::vector<std::uint8_t>& bytes);

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

/// Copies parameter values into `model`. Every stored name must exist with
/// the same shape and every model parameter must be covered.
void RestoreParameters(const Checkpoint& checkpoint, SceneModel& model);

/// Builds a model with the checkpoint's config, dims and hierarchy and loads
/// its parameters. `knowledge` must outlive the model.
std::unique_ptr<SceneModel> ModelFromCheckpoint(const Checkpoint& checkpoint,
                                                const KnowledgeStore& knowledge);

}  // namespace sceneforge

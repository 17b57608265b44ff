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
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sceneforge/dataset.hpp"

namespace sceneforge {

struct SyntheticOptions {
  std::size_t n_videos = 600;
  std::size_t parents = 3;
  std::size_t children_per_parent = 4;
  FeatureDims dims{12, 32, 16, 16, 16, 3, 8};
  double noise = 0.5;
  std::uint64_t seed = 0;
  // Videos of one extra level-2 label that never appears in training.
  std::size_t heldout_videos = 50;
};

/// What the generator knew: enough to build a nearest-centroid oracle and to
/// register the held-out label.
struct SyntheticTruth {
  SyntheticOptions options;
  // Level-2 name -> noise-free frame feature (2D followed by 3D).
  std::map<std::string, std::vector<double>> frame_centroids;
  std::map<std::string, std::vector<double>> concepts;  // every label, level 1 and 2
  std::string heldout_label;
  std::string heldout_parent;
  std::string heldout_token;
  std::vector<double> heldout_embedding;  // near the held-out concept
};

/// Writes manifest.jsonl, heldout.jsonl, kg.txt, generator.json and the
/// feature files under `out_dir`. Each frame is drawn around the concept of
/// one of the video's labels (round robin), so labels are recoverable from
/// features. The output is a pure function of `options`.
SyntheticTruth GenerateSynthetic(const SyntheticOptions& options, const std::filesystem::path& out_dir);

SyntheticTruth LoadSyntheticTruth(const std::filesystem::path& generator_json);

}  // namespace sceneforge

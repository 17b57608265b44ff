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
#include <string>
#include <utility>
#include <vector>

#include "sceneforge/hierarchy.hpp"
#include "sceneforge/knowledge.hpp"
#include "sceneforge/tensor.hpp"

namespace sceneforge {

enum class Split { kTrain, kVal, kTest };

const char* SplitName(Split split);
Split ParseSplit(const std::string& name);

struct FeatureDims {
  std::size_t n_frames = 0;
  std::size_t d2d = 0;
  std::size_t d3d = 0;
  std::size_t dtext = 0;
  std::size_t d_region = 0;
  std::size_t regions_per_frame = 0;
  std::size_t d_kg = 0;
  std::size_t concat() const { return d2d + d3d + dtext; }
  bool operator==(const FeatureDims&) const = default;
};

struct VideoRecord {
  std::string video_id;
  Split split = Split::kTrain;
  // Paths as written in the manifest, relative to its directory.
  std::string frame_2d;
  std::string clip_3d;
  std::string text;
  std::string regions;
  std::vector<std::string> keywords;
  std::vector<std::pair<std::string, std::string>> label_paths;  // (parent, child)
  // Valid regions per frame; empty means every frame has regions_per_frame.
  std::vector<std::size_t> region_counts;
};

/// A parsed and validated manifest.
struct Manifest {
  std::filesystem::path path;
  LabelHierarchy hierarchy;
  FeatureDims dims;
  std::size_t max_keywords = 10;
  std::string kg_embeddings;  // relative path, may be empty
  std::vector<VideoRecord> records;

  std::filesystem::path Resolve(const std::string& relative) const;
  std::vector<const VideoRecord*> Select(Split split) const;
};

/// Line 1 is a header object {"hierarchy", "dims", "max_keywords",
/// "kg_embeddings"}; every further non-blank line is one record. Malformed
/// JSON or a missing field is a parse error with the line number; a record
/// that breaks an invariant (unknown label, wrong parent, too many keywords,
/// duplicate id, missing or mis-shaped tensor file) is a validation error
/// naming the video.
Manifest LoadManifest(const std::filesystem::path& path);

/// The manifest's knowledge table, or an empty store of width d_kg when it
/// names none.
KnowledgeStore LoadKnowledge(const Manifest& manifest);

/// Writes `manifest` back out in the same format.
void SaveManifest(const Manifest& manifest, const std::filesystem::path& path);

/// Features of one video, loaded and widened to 64-bit.
struct VideoFeatures {
  Tensor frame_2d;  // [n_frames, d2d]
  Tensor clip_3d;   // [n_frames, d3d]
  Tensor text;      // [dtext]
  Tensor regions;   // [n_frames, regions_per_frame, d_region]
  std::vector<std::size_t> region_counts;
};

/// A training or evaluation example with everything resolved.
struct Example {
  const VideoRecord* record = nullptr;
  VideoFeatures features;
  std::vector<std::uint8_t> level1_targets;
  std::vector<std::uint8_t> level2_targets;
  // Embeddings of keywords found in the knowledge store, in manifest order.
  std::vector<const Tensor*> keyword_vectors;
};

VideoFeatures LoadFeatures(const Manifest& manifest, const VideoRecord& record);

/// Loads features and targets for `records`. Keywords missing from
/// `knowledge` are skipped with a warning.
std::vector<Example> BuildExamples(const Manifest& manifest,
                                   const std::vector<const VideoRecord*>& records,
                                   const KnowledgeStore& knowledge);

/// Targets for a hierarchy, from (parent, child) name pairs.
void EncodeTargets(const LabelHierarchy& hierarchy,
                   const std::vector<std::pair<std::string, std::string>>& paths,
                   std::vector<std::uint8_t>* level1, std::vector<std::uint8_t>* level2);

}  // namespace sceneforge

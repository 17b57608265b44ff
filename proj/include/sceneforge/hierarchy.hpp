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
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace sceneforge {

struct LabelSpec {
  std::string name;
  std::string parent;    // level-2 labels only
  std::string kg_token;  // empty when the label has no knowledge-graph entity
  // Token used for embedding lookup: the KG token, else the name itself.
  const std::string& lookup_token() const { return kg_token.empty() ? name : kg_token; }
};

/// Two-level scene taxonomy with a total parent map from level 2 to level 1.
class LabelHierarchy {
 public:
  LabelHierarchy() = default;
  /// Validates and indexes. Throws a validation error on an empty level, a
  /// duplicate name within a level, or a level-2 label whose parent is not a
  /// level-1 label.
  LabelHierarchy(std::vector<LabelSpec> level1, std::vector<LabelSpec> level2);

  static void Validate(const std::vector<LabelSpec>& level1, const std::vector<LabelSpec>& level2);

  std::size_t level1_size() const { return level1_.size(); }
  std::size_t level2_size() const { return level2_.size(); }
  const std::vector<LabelSpec>& level1() const { return level1_; }
  const std::vector<LabelSpec>& level2() const { return level2_; }
  // Index of the level-1 parent of level-2 label `child`.
  std::size_t parent(std::size_t child) const { return parent_[child]; }
  const std::vector<std::size_t>& parents() const { return parent_; }

  std::optional<std::size_t> FindLevel1(const std::string& name) const;
  std::optional<std::size_t> FindLevel2(const std::string& name) const;

  /// Returns a copy with one more level-2 label appended.
  LabelHierarchy WithLevel2(LabelSpec extra) const;

  bool operator==(const LabelHierarchy& other) const;

 private:
  std::vector<LabelSpec> level1_;
  std::vector<LabelSpec> level2_;
  std::vector<std::size_t> parent_;
  std::unordered_map<std::string, std::size_t> index1_;
  std::unordered_map<std::string, std::size_t> index2_;
};

}  // namespace sceneforge

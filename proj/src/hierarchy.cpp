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

#include "sceneforge/hierarchy.hpp"

#include <unordered_set>

#include "sceneforge/error.hpp"

namespace sceneforge {

void LabelHierarchy::Validate(const std::vector<LabelSpec>& level1,
                              const std::vector<LabelSpec>& level2) {
  Require(!level1.empty(), ErrorKind::kValidation, "empty level: hierarchy has no level-1 labels");
  Require(!level2.empty(), ErrorKind::kValidation, "empty level: hierarchy has no level-2 labels");
  std::unordered_set<std::string> seen1, seen2;
  for (const auto& l : level1) {
    Require(!l.name.empty(), ErrorKind::kValidation, "level-1 label with empty name");
    Require(seen1.insert(l.name).second, ErrorKind::kValidation,
            "duplicate label '" + l.name + "' in level 1");
  }
  for (const auto& l : level2) {
    Require(!l.name.empty(), ErrorKind::kValidation, "level-2 label with empty name");
    Require(seen2.insert(l.name).second, ErrorKind::kValidation,
            "duplicate label '" + l.name + "' in level 2");
    Require(seen1.count(l.parent) != 0, ErrorKind::kValidation,
            "orphan label '" + l.name + "': parent '" + l.parent + "' is not a level-1 label");
  }
}

LabelHierarchy::LabelHierarchy(std::vector<LabelSpec> level1, std::vector<LabelSpec> level2) {
  Validate(level1, level2);
  level1_ = std::move(level1);
  level2_ = std::move(level2);
  for (std::size_t i = 0; i < level1_.size(); ++i) index1_[level1_[i].name] = i;
  for (std::size_t i = 0; i < level2_.size(); ++i) {
    index2_[level2_[i].name] = i;
    parent_.push_back(index1_.at(level2_[i].parent));
  }
}

std::optional<std::size_t> LabelHierarchy::FindLevel1(const std::string& name) const {
  auto it = index1_.find(name);
  if (it == index1_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> LabelHierarchy::FindLevel2(const std::string& name) const {
  auto it = index2_.find(name);
  if (it == index2_.end()) return std::nullopt;
  return it->second;
}

LabelHierarchy LabelHierarchy::WithLevel2(LabelSpec extra) const {
  auto level2 = level2_;
  level2.push_back(std::move(extra));
  return LabelHierarchy(level1_, std::move(level2));
}

bool LabelHierarchy::operator==(const LabelHierarchy& other) const {
  auto same = [](const std::vector<LabelSpec>& a, const std::vector<LabelSpec>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].name != b[i].name || a[i].parent != b[i].parent || a[i].kg_token != b[i].kg_token) {
        return false;
      }
    }
    return true;
  };
  return same(level1_, other.level1_) && same(level2_, other.level2_);
}

}  // namespace sceneforge

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
#include <map>
#include <string>

#include "sceneforge/parameter_store.hpp"
#include "sceneforge/tensor.hpp"

namespace sceneforge {

enum class TokenRole { kKeyword, kLabel };

/// Pretrained entity embeddings keyed by token.
///
/// Pretrained vectors are frozen. Label tokens without a pretrained entry get
/// a trainable fallback vector registered in a ParameterStore on first use.
class KnowledgeStore {
 public:
  explicit KnowledgeStore(std::size_t dim = 0) : dim_(dim) {}

  /// Reads the text table: one token per line followed by `dim` decimals.
  /// A leading "<count> <dim>" line is skipped. `dim` 0 takes the width of
  /// the first entry.
  static KnowledgeStore LoadText(const std::filesystem::path& path, std::size_t dim = 0);
  void SaveText(const std::filesystem::path& path) const;

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return table_.size(); }
  const std::map<std::string, Tensor>& entries() const { return table_; }

  void Insert(const std::string& token, Tensor vector);
  const Tensor* Pretrained(const std::string& token) const;

  /// Label role: the pretrained vector, else the fallback parameter in
  /// `params`, created on first call with Normal(0, init_std^2) entries.
  /// Keyword role: the pretrained vector or nullptr (a warning is logged
  /// once per token).
  const Tensor* Lookup(const std::string& token, TokenRole role, ParameterStore* params,
                       double init_std = kDefaultInitStd) const;

  static std::string FallbackName(const std::string& token) { return "label_fallback/" + token; }

 private:
  std::size_t dim_;
  std::map<std::string, Tensor> table_;
};

}  // namespace sceneforge

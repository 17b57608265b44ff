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

namespace sceneforge {

/// Every tunable of the model and the training loop.
///
/// Text form is flat `key=value` lines; `#` starts a comment. Unknown keys
/// are rejected.
struct Config {
  // Model.
  std::size_t d_emb = 64;
  std::size_t heads = 8;
  std::size_t layers = 2;
  std::size_t region_layers = 1;
  std::size_t ff_hidden = 0;  // 0 means 2 * d_emb
  double keep_prob = 0.5;
  double init_std = 0.02;

  // Objective weights.
  double beta_t = 1.0;
  double beta_nt = 1.0;
  double beta_distill = 1.0;
  double beta_level1 = 1.0;
  double beta_level2 = 1.0;

  // Optimization.
  double lr = 3e-4;
  double weight_decay = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  std::uint64_t seed = 0;

  // Execution. threads 0 means SCENEFORGE_THREADS or the hardware count.
  std::size_t threads = 0;
  bool deterministic = false;

  std::size_t feed_forward_width() const { return ff_hidden == 0 ? 2 * d_emb : ff_hidden; }
  bool operator==(const Config&) const = default;
};

/// Applies `key=value` lines on top of `base`. Throws a config error naming
/// the line for unknown keys, bad values, or conflicting aliases.
Config ParseConfig(const std::string& text, Config base = {});
Config LoadConfigFile(const std::filesystem::path& path);

/// Named presets: "synthetic" (the defaults), "small" (tiny, for gradient
/// checks and tests) and "large" (d_emb 768).
Config Preset(const std::string& name);

/// A preset name or a path to a config file.
Config ResolveConfig(const std::string& name_or_path);

/// Canonical text form; ParseConfig(ToText(c)) == c.
std::string ToText(const Config& config);

void ValidateConfig(const Config& config);

}  // namespace sceneforge

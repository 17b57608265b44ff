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

#include "sceneforge/config.hpp"
#include "sceneforge/gradcheck.hpp"

namespace sceneforge {

/// Finite-difference check of the full two-stream objective, averaged over
/// a two-video synthetic batch, in eval mode. The corpus is written under
/// `scratch_dir`.
GradCheckResult CheckModelGradients(const Config& config, std::uint64_t seed,
                                    const std::filesystem::path& scratch_dir);

}  // namespace sceneforge

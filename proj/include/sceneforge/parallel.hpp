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
#include <functional>

namespace sceneforge {

/// Worker count: 1 when deterministic, else `requested` (0 = hardware
/// concurrency), capped by SCENEFORGE_THREADS when set.
std::size_t ResolveThreads(std::size_t requested, bool deterministic);

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index runs
/// exactly once; the first exception thrown is rethrown on the caller.
void ParallelFor(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace sceneforge

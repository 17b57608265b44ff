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

#include "sceneforge/diagnostics.hpp"

#include "sceneforge/dataset.hpp"
#include "sceneforge/model.hpp"
#include "sceneforge/synthetic.hpp"
#include "sceneforge/trainer.hpp"

namespace sceneforge {

GradCheckResult CheckModelGradients(const Config& config, std::uint64_t seed,
                                    const std::filesystem::path& scratch_dir) {
  SyntheticOptions opt;
  opt.n_videos = 2;
  opt.heldout_videos = 1;
  opt.seed = seed;
  opt.dims.n_frames = 4;
  GenerateSynthetic(opt, scratch_dir);
  const Manifest manifest = LoadManifest(scratch_dir / "manifest.jsonl");
  const KnowledgeStore kg = LoadKnowledge(manifest);
  std::vector<const VideoRecord*> records;
  for (const auto& r : manifest.records) records.push_back(&r);
  const auto examples = BuildExamples(manifest, records, kg);

  Config cfg = config;
  cfg.seed = seed;
  SceneModel model(cfg, manifest.dims, manifest.hierarchy, kg);
  const LossWeights weights = LossWeights::From(cfg);
  LossBuilder loss = [&](Graph& g, ParameterStore&) {
    Var total = VideoObjective(g, model, examples[0], weights);
    for (std::size_t i = 1; i < examples.size(); ++i) {
      total = g.Add(total, VideoObjective(g, model, examples[i], weights));
    }
    return g.Scale(total, 1.0 / static_cast<double>(examples.size()));
  };
  GradCheckOptions options;
  options.sample_seed = seed;
  return FiniteDiffCheck(loss, model.params(), options);
}

}  // namespace sceneforge

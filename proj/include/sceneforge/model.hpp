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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sceneforge/blocks.hpp"
#include "sceneforge/config.hpp"
#include "sceneforge/dataset.hpp"
#include "sceneforge/graph.hpp"
#include "sceneforge/hierarchy.hpp"
#include "sceneforge/knowledge.hpp"
#include "sceneforge/parameter_store.hpp"

namespace sceneforge {

/// Basic and refined scores of one stream at both hierarchy levels.
/// refined1 is basic1; refined2[q] is basic1[parent(q)] + basic2[q].
struct ScoreSheet {
  Var basic1;
  Var basic2;
  Var refined1;
  Var refined2;
};

/// The same sheet as plain values.
struct ScoreValues {
  Tensor basic1;
  Tensor basic2;
  Tensor refined1;
  Tensor refined2;
};

ScoreSheet RefineScores(Graph& g, Var basic1, Var basic2, const LabelHierarchy& hierarchy);
ScoreValues Values(const Graph& g, const ScoreSheet& sheet);

/// Counts entries into the non-temporal branch. Inference must leave it
/// untouched.
std::uint64_t NonTemporalOpCount();
void ResetNonTemporalOpCount();

/// Frame refinement + CLS transformer + per-level scoring heads.
class TemporalStream {
 public:
  TemporalStream() = default;
  TemporalStream(ParameterStore& store, const Config& config, const FeatureDims& dims,
                 const LabelHierarchy& hierarchy);

  /// Concatenates (2D, 3D, text) per frame and refines: [n_frames, d_emb].
  Var FrameGlobals(Graph& g, ParameterStore& store, const VideoFeatures& f) const;
  /// Output at the CLS slot.
  Var Encode(Graph& g, ParameterStore& store, Var frames,
             std::vector<Tensor>* attention = nullptr) const;
  ScoreSheet Score(Graph& g, ParameterStore& store, Var video) const;
  ScoreSheet Forward(Graph& g, ParameterStore& store, const VideoFeatures& f) const;

  const RefineBlock& refine() const { return refine_; }
  const TransformerEncoder& encoder() const { return encoder_; }

 private:
  const LabelHierarchy* hierarchy_ = nullptr;
  double keep_prob_ = 1.0;
  RefineBlock refine_;
  TransformerEncoder encoder_;
  Mlp head1_;
  Mlp head2_;
};

/// Embedding source for each label of a hierarchy: a frozen pretrained
/// vector or the name of a trainable fallback parameter.
struct LabelEmbeddings {
  std::vector<const Tensor*> level1_pretrained;
  std::vector<std::string> level1_params;
  std::vector<const Tensor*> level2_pretrained;
  std::vector<std::string> level2_params;
};

/// Intermediate values of one non-temporal forward pass.
struct NonTemporalTrace {
  Var local_frames;   // [n_frames, d_emb] before region fusion
  Var fused_frames;   // [n_frames, d_emb]
  Var pooled;         // mean keyword feature + mean frame, [d_emb]
  Var video;          // after the output projection, [d_emb]
  std::vector<Tensor> region_attention;  // per frame with regions, [1, 1, m]
  Tensor keyword_attention;              // [keywords, n_frames]; empty without keywords
};

/// Region encoding and fusion, keyword-generated soft clustering, and
/// embedding-matching label scores.
class NonTemporalStream {
 public:
  NonTemporalStream() = default;
  NonTemporalStream(ParameterStore& store, const Config& config, const FeatureDims& dims,
                    const LabelHierarchy& hierarchy, const KnowledgeStore& knowledge);

  Var FrameLocals(Graph& g, ParameterStore& store, const VideoFeatures& f) const;
  /// Regions of one frame, [m, d_region] -> [m, d_emb].
  Var EncodeRegions(Graph& g, ParameterStore& store, Var regions,
                    std::vector<Tensor>* attention = nullptr) const;
  /// Single-query attention of a frame over its encoded regions; returns
  /// the fused [d_emb] vector and the weights.
  AttentionOutput FuseFrame(Graph& g, ParameterStore& store, Var local_frame, Var regions) const;
  /// Generated (w, c, z) for a batch of keyword embeddings [k, d_kg]:
  /// [k, d_emb], [k, 1], [k, d_emb].
  struct ClusterParams {
    Var w;
    Var c;
    Var z;
  };
  ClusterParams GenerateClusterParams(Graph& g, ParameterStore& store, Var keywords) const;
  /// Soft-assigns frames to each keyword's cluster: row k is
  /// sum_j alpha[k, j] (frame_j - z_k), where alpha is softmax over frames of
  /// w_k . frame_j + c_k.
  Var KeywordFeatures(Graph& g, const ClusterParams& p, Var frames, Tensor* alpha = nullptr) const;
  /// Mean keyword feature plus mean frame, projected; the keyword term is
  /// dropped when there are no keywords.
  Var VideoFeature(Graph& g, ParameterStore& store, Var frames, std::span<const Tensor* const> keywords,
                   NonTemporalTrace* trace = nullptr) const;

  LabelEmbeddings ResolveLabels(const LabelHierarchy& hierarchy, ParameterStore& store) const;
  ScoreSheet Score(Graph& g, ParameterStore& store, Var video, const LabelHierarchy& hierarchy,
                   const LabelEmbeddings& labels) const;
  ScoreSheet Forward(Graph& g, ParameterStore& store, const Example& example,
                     NonTemporalTrace* trace = nullptr) const;
  /// Scores against another hierarchy (for labels added after training).
  ScoreSheet Forward(Graph& g, ParameterStore& store, const Example& example,
                     const LabelHierarchy& hierarchy, const LabelEmbeddings& labels,
                     NonTemporalTrace* trace = nullptr) const;

  const RefineBlock& refine() const { return refine_; }
  const TransformerEncoder& region_encoder() const { return region_encoder_; }
  const LabelEmbeddings& labels() const { return labels_; }

 private:
  Var LabelMatrix(Graph& g, ParameterStore& store, const std::vector<const Tensor*>& pretrained,
                  const std::vector<std::string>& params) const;

  const LabelHierarchy* hierarchy_ = nullptr;
  const KnowledgeStore* knowledge_ = nullptr;
  double keep_prob_ = 1.0;
  double init_std_ = kDefaultInitStd;
  std::size_t d_emb_ = 0;
  RefineBlock refine_;
  std::string region_adapter_;
  TransformerEncoder region_encoder_;
  AttentionBlock fusion_;
  Mlp gen_w_;
  Mlp gen_c_;
  Mlp gen_z_;
  std::string projection_;
  Mlp match_video_[2];
  Mlp match_label_[2];
  LabelEmbeddings labels_;
};

/// Both streams over one parameter store.
class SceneModel {
 public:
  SceneModel(const Config& config, const FeatureDims& dims, LabelHierarchy hierarchy,
             const KnowledgeStore& knowledge);

  SceneModel(const SceneModel&) = delete;
  SceneModel& operator=(const SceneModel&) = delete;

  const Config& config() const { return config_; }
  const FeatureDims& dims() const { return dims_; }
  const LabelHierarchy& hierarchy() const { return *hierarchy_; }
  const KnowledgeStore& knowledge() const { return *knowledge_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }
  const TemporalStream& temporal() const { return temporal_; }
  const NonTemporalStream& nontemporal() const { return nontemporal_; }

  ScoreSheet Temporal(Graph& g, const Example& example);
  ScoreSheet NonTemporal(Graph& g, const Example& example, NonTemporalTrace* trace = nullptr);

 private:
  Config config_;
  FeatureDims dims_;
  std::unique_ptr<LabelHierarchy> hierarchy_;
  const KnowledgeStore* knowledge_;
  ParameterStore params_;
  TemporalStream temporal_;
  NonTemporalStream nontemporal_;
};

}  // namespace sceneforge

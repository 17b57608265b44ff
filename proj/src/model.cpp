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

#include "sceneforge/model.hpp"

#include <atomic>

#include "sceneforge/error.hpp"

namespace sceneforge {

namespace {

std::atomic<std::uint64_t> g_nontemporal_ops{0};

void CountNonTemporal() { g_nontemporal_ops.fetch_add(1, std::memory_order_relaxed); }

Var ConcatFrameFeatures(Graph& g, const VideoFeatures& f) {
  const std::size_t n = f.frame_2d.rows();
  Require(f.clip_3d.rank() == 2 && f.clip_3d.rows() == n && f.text.rank() == 1, ErrorKind::kDimension,
          "frame features disagree: 2D " + ShapeString(f.frame_2d.dims()) + ", 3D " +
              ShapeString(f.clip_3d.dims()) + ", text " + ShapeString(f.text.dims()));
  const Var parts[] = {g.ConstantRef(f.frame_2d), g.ConstantRef(f.clip_3d),
                       g.RepeatRows(g.ConstantRef(f.text), n)};
  return g.ConcatLastDim(parts);
}

}  // namespace

std::uint64_t NonTemporalOpCount() { return g_nontemporal_ops.load(); }
void ResetNonTemporalOpCount() { g_nontemporal_ops.store(0); }

ScoreSheet RefineScores(Graph& g, Var basic1, Var basic2, const LabelHierarchy& h) {
  Require(g.value(basic1).size() == h.level1_size() && g.value(basic2).size() == h.level2_size(),
          ErrorKind::kConfig,
          "score widths " + std::to_string(g.value(basic1).size()) + "/" +
              std::to_string(g.value(basic2).size()) + " do not match the hierarchy (" +
              std::to_string(h.level1_size()) + "/" + std::to_string(h.level2_size()) + ")");
  Var refined2 = g.Add(g.Gather(basic1, h.parents()), basic2);
  return {basic1, basic2, basic1, refined2};
}

ScoreValues Values(const Graph& g, const ScoreSheet& s) {
  return {g.value(s.basic1), g.value(s.basic2), g.value(s.refined1), g.value(s.refined2)};
}

// ---------------------------------------------------------------------------
// Temporal stream

TemporalStream::TemporalStream(ParameterStore& store, const Config& c, const FeatureDims& dims,
                               const LabelHierarchy& h)
    : hierarchy_(&h), keep_prob_(c.keep_prob) {
  refine_ = RefineBlock::Create(store, "temporal/refine", dims.concat(), c.d_emb, c.d_emb, c.init_std);
  EncoderOptions enc;
  enc.width = c.d_emb;
  enc.heads = c.heads;
  enc.layers = c.layers;
  enc.ff_hidden = c.feed_forward_width();
  enc.max_positions = dims.n_frames + 1;
  enc.cls = true;
  encoder_ = TransformerEncoder::Create(store, "temporal/encoder", enc, c.init_std);
  head1_ = Mlp::Create(store, "temporal/head1", c.d_emb, c.d_emb, h.level1_size(), c.init_std);
  head2_ = Mlp::Create(store, "temporal/head2", c.d_emb, c.d_emb, h.level2_size(), c.init_std);
}

Var TemporalStream::FrameGlobals(Graph& g, ParameterStore& store, const VideoFeatures& f) const {
  return refine_.Forward(g, store, ConcatFrameFeatures(g, f), keep_prob_);
}

Var TemporalStream::Encode(Graph& g, ParameterStore& store, Var frames,
                           std::vector<Tensor>* attention) const {
  return g.Row(encoder_.EncodeWithCls(g, store, frames, keep_prob_, attention), 0);
}

ScoreSheet TemporalStream::Score(Graph& g, ParameterStore& store, Var video) const {
  return RefineScores(g, head1_.Forward(g, store, video), head2_.Forward(g, store, video), *hierarchy_);
}

ScoreSheet TemporalStream::Forward(Graph& g, ParameterStore& store, const VideoFeatures& f) const {
  return Score(g, store, Encode(g, store, FrameGlobals(g, store, f)));
}

// ---------------------------------------------------------------------------
// Non-temporal stream

NonTemporalStream::NonTemporalStream(ParameterStore& store, const Config& c, const FeatureDims& dims,
                                     const LabelHierarchy& h, const KnowledgeStore& knowledge)
    : hierarchy_(&h),
      knowledge_(&knowledge),
      keep_prob_(c.keep_prob),
      init_std_(c.init_std),
      d_emb_(c.d_emb) {
  Require(knowledge.dim() == 0 || knowledge.dim() == dims.d_kg, ErrorKind::kConfig,
          "knowledge embeddings have width " + std::to_string(knowledge.dim()) +
              " but the manifest declares d_kg " + std::to_string(dims.d_kg));
  const std::size_t d = c.d_emb;
  refine_ = RefineBlock::Create(store, "nontemporal/refine", dims.concat(), d, d, c.init_std);
  region_adapter_ = "nontemporal/region_adapter";
  store.Gaussian(region_adapter_ + "/w", {d, dims.d_region}, c.init_std);
  store.Zeros(region_adapter_ + "/b", {d});
  EncoderOptions enc;
  enc.width = d;
  enc.heads = c.heads;
  enc.layers = c.region_layers;
  enc.ff_hidden = c.feed_forward_width();
  region_encoder_ = TransformerEncoder::Create(store, "nontemporal/region_encoder", enc, c.init_std);
  fusion_ = AttentionBlock::Create(store, "nontemporal/fusion", d, 1, false, c.init_std);
  gen_w_ = Mlp::Create(store, "nontemporal/gen_w", dims.d_kg, d, d, c.init_std);
  gen_c_ = Mlp::Create(store, "nontemporal/gen_c", dims.d_kg, d, 1, c.init_std);
  gen_z_ = Mlp::Create(store, "nontemporal/gen_z", dims.d_kg, d, d, c.init_std);
  projection_ = "nontemporal/projection";
  store.Gaussian(projection_ + "/w", {d, d}, c.init_std);
  store.Zeros(projection_ + "/b", {d});
  for (int i = 0; i < 2; ++i) {
    const std::string level = std::to_string(i + 1);
    match_video_[i] = Mlp::Create(store, "nontemporal/match" + level + "/video", d, d, d, c.init_std);
    match_label_[i] = Mlp::Create(store, "nontemporal/match" + level + "/label", dims.d_kg, d, d, c.init_std);
  }
  labels_ = ResolveLabels(h, store);
}

Var NonTemporalStream::FrameLocals(Graph& g, ParameterStore& store, const VideoFeatures& f) const {
  CountNonTemporal();
  return refine_.Forward(g, store, ConcatFrameFeatures(g, f), keep_prob_);
}

Var NonTemporalStream::EncodeRegions(Graph& g, ParameterStore& store, Var regions,
                                     std::vector<Tensor>* attention) const {
  CountNonTemporal();
  Var adapted = g.Linear(regions, g.Param(store, region_adapter_ + "/w"),
                         g.Param(store, region_adapter_ + "/b"));
  return region_encoder_.Encode(g, store, adapted, keep_prob_, attention);
}

AttentionOutput NonTemporalStream::FuseFrame(Graph& g, ParameterStore& store, Var local_frame,
                                             Var regions) const {
  CountNonTemporal();
  return fusion_.Forward(g, store, local_frame, regions);
}

NonTemporalStream::ClusterParams NonTemporalStream::GenerateClusterParams(Graph& g, ParameterStore& store,
                                                                          Var keywords) const {
  CountNonTemporal();
  return {gen_w_.Forward(g, store, keywords), gen_c_.Forward(g, store, keywords),
          gen_z_.Forward(g, store, keywords)};
}

Var NonTemporalStream::KeywordFeatures(Graph& g, const ClusterParams& p, Var frames, Tensor* alpha) const {
  CountNonTemporal();
  // c_k shifts every logit of keyword k equally, so the softmax over frames
  // cancels it. Leaving it out keeps its gradient exactly zero instead of
  // rounding noise from the shift.
  Var logits = g.Linear(p.w, frames);
  Var weights = g.Softmax(logits);
  if (alpha) *alpha = g.value(weights);
  // Rows of the assignment sum to one, so sum_j a_kj (f_j - z_k) = (A F)_k - z_k.
  return g.Sub(g.MatMul(weights, frames), p.z);
}

Var NonTemporalStream::VideoFeature(Graph& g, ParameterStore& store, Var frames,
                                    std::span<const Tensor* const> keywords, NonTemporalTrace* trace) const {
  CountNonTemporal();
  Var pooled = g.MeanRows(frames);
  if (!keywords.empty()) {
    std::vector<Var> rows;
    rows.reserve(keywords.size());
    for (const Tensor* k : keywords) rows.push_back(g.ConstantRef(*k));
    ClusterParams p = GenerateClusterParams(g, store, g.StackRows(rows));
    Tensor alpha;
    Var per_keyword = KeywordFeatures(g, p, frames, &alpha);
    pooled = g.Add(g.MeanRows(per_keyword), pooled);
    if (trace) trace->keyword_attention = std::move(alpha);
  }
  Var video = g.Linear(pooled, g.Param(store, projection_ + "/w"), g.Param(store, projection_ + "/b"));
  if (trace) {
    trace->pooled = pooled;
    trace->video = video;
  }
  return video;
}

LabelEmbeddings NonTemporalStream::ResolveLabels(const LabelHierarchy& h, ParameterStore& store) const {
  LabelEmbeddings out;
  auto resolve = [&](const std::vector<LabelSpec>& labels, std::vector<const Tensor*>* pretrained,
                     std::vector<std::string>* params) {
    for (const auto& l : labels) {
      const std::string& token = l.lookup_token();
      const Tensor* t = knowledge_->Pretrained(token);
      if (t == nullptr) knowledge_->Lookup(token, TokenRole::kLabel, &store, init_std_);
      pretrained->push_back(t);
      params->push_back(t ? std::string() : KnowledgeStore::FallbackName(token));
    }
  };
  resolve(h.level1(), &out.level1_pretrained, &out.level1_params);
  resolve(h.level2(), &out.level2_pretrained, &out.level2_params);
  return out;
}

Var NonTemporalStream::LabelMatrix(Graph& g, ParameterStore& store,
                                   const std::vector<const Tensor*>& pretrained,
                                   const std::vector<std::string>& params) const {
  std::vector<Var> rows;
  rows.reserve(pretrained.size());
  for (std::size_t i = 0; i < pretrained.size(); ++i) {
    rows.push_back(pretrained[i] ? g.ConstantRef(*pretrained[i]) : g.Param(store, params[i]));
  }
  return g.StackRows(rows);
}

ScoreSheet NonTemporalStream::Score(Graph& g, ParameterStore& store, Var video, const LabelHierarchy& h,
                                    const LabelEmbeddings& labels) const {
  CountNonTemporal();
  Var basic[2];
  for (int i = 0; i < 2; ++i) {
    Var table = i == 0 ? LabelMatrix(g, store, labels.level1_pretrained, labels.level1_params)
                       : LabelMatrix(g, store, labels.level2_pretrained, labels.level2_params);
    Var label_side = match_label_[i].Forward(g, store, table);
    Var video_side = match_video_[i].Forward(g, store, video);
    basic[i] = g.Linear(video_side, label_side);
  }
  return RefineScores(g, basic[0], basic[1], h);
}

ScoreSheet NonTemporalStream::Forward(Graph& g, ParameterStore& store, const Example& e,
                                      NonTemporalTrace* trace) const {
  return Forward(g, store, e, *hierarchy_, labels_, trace);
}

ScoreSheet NonTemporalStream::Forward(Graph& g, ParameterStore& store, const Example& e,
                                      const LabelHierarchy& h, const LabelEmbeddings& labels,
                                      NonTemporalTrace* trace) const {
  const VideoFeatures& f = e.features;
  Var locals = FrameLocals(g, store, f);
  const std::size_t n = f.frame_2d.rows();
  Require(f.regions.rank() == 3 && f.regions.dim(0) == n && f.region_counts.size() == n,
          ErrorKind::kDimension, "region features " + ShapeString(f.regions.dims()) + " do not match " +
                                     std::to_string(n) + " frames");
  const std::size_t m = f.regions.dim(1), dr = f.regions.dim(2);
  std::vector<Var> fused;
  fused.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t count = f.region_counts[j];
    Var local = g.Row(locals, j);
    if (count == 0) {
      fused.push_back(local);
      continue;
    }
    Require(count <= m, ErrorKind::kDimension, "region count exceeds the region tensor");
    const auto begin = f.regions.data().begin() + static_cast<std::ptrdiff_t>(j * m * dr);
    Tensor regions({count, dr}, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(count * dr)));
    Var encoded = EncodeRegions(g, store, g.Constant(std::move(regions)));
    AttentionOutput att = FuseFrame(g, store, local, encoded);
    if (trace) trace->region_attention.push_back(std::move(att.weights));
    fused.push_back(att.output);
  }
  Var frames = g.StackRows(fused);
  if (trace) {
    trace->local_frames = locals;
    trace->fused_frames = frames;
  }
  Var video = VideoFeature(g, store, frames, e.keyword_vectors, trace);
  return Score(g, store, video, h, labels);
}

// ---------------------------------------------------------------------------

SceneModel::SceneModel(const Config& config, const FeatureDims& dims, LabelHierarchy hierarchy,
                       const KnowledgeStore& knowledge)
    : config_(config),
      dims_(dims),
      hierarchy_(std::make_unique<LabelHierarchy>(std::move(hierarchy))),
      knowledge_(&knowledge),
      params_(config.seed) {
  ValidateConfig(config_);
  temporal_ = TemporalStream(params_, config_, dims_, *hierarchy_);
  nontemporal_ = NonTemporalStream(params_, config_, dims_, *hierarchy_, knowledge);
}

ScoreSheet SceneModel::Temporal(Graph& g, const Example& e) {
  return temporal_.Forward(g, params_, e.features);
}

ScoreSheet SceneModel::NonTemporal(Graph& g, const Example& e, NonTemporalTrace* trace) {
  return nontemporal_.Forward(g, params_, e, trace);
}

}  // namespace sceneforge

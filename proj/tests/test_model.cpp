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

#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "corpus.hpp"
#include "sceneforge/gradcheck.hpp"
#include "sceneforge/losses.hpp"
#include "sceneforge/model.hpp"
#include "sceneforge/trainer.hpp"

using namespace sceneforge;
using sceneforge::testing::Corpus;
using sceneforge::testing::KindOf;
using sceneforge::testing::MaxDiff;
using sceneforge::testing::RandomTensor;
using sceneforge::testing::SmallConfig;
using sceneforge::testing::TinyCorpus;

namespace {

LabelHierarchy SizedHierarchy(std::size_t parents, std::size_t children) {
  std::vector<LabelSpec> l1, l2;
  for (std::size_t p = 0; p < parents; ++p) l1.push_back({"P" + std::to_string(p), "", ""});
  for (std::size_t c = 0; c < children; ++c) {
    l2.push_back({"C" + std::to_string(c), "P" + std::to_string(c % parents), ""});
  }
  return LabelHierarchy(l1, l2);
}

Example PermuteFrames(const Example& e, const std::vector<std::size_t>& perm) {
  Example out = e;
  const auto& f = e.features;
  const std::size_t per_frame = f.regions.size() / f.regions.dim(0);
  for (std::size_t j = 0; j < perm.size(); ++j) {
    std::copy(f.frame_2d.row(perm[j]).begin(), f.frame_2d.row(perm[j]).end(),
              out.features.frame_2d.row(j).begin());
    std::copy(f.clip_3d.row(perm[j]).begin(), f.clip_3d.row(perm[j]).end(),
              out.features.clip_3d.row(j).begin());
    std::copy_n(f.regions.data().begin() + perm[j] * per_frame, per_frame,
                out.features.regions.data().begin() + j * per_frame);
    out.features.region_counts[j] = f.region_counts[perm[j]];
  }
  return out;
}

const Example& WithKeywords(const std::vector<Example>& examples) {
  for (const auto& e : examples) {
    if (e.keyword_vectors.size() >= 2) return e;
  }
  FAIL("no example with keywords");
  return examples.front();
}

void CopyParams(ParameterStore& store, const std::string& from, const std::string& to) {
  for (const char* suffix : {"/w1", "/b1", "/w2", "/b2", "/w3"}) {
    store.Get(to + suffix).value = store.Get(from + suffix).value;
  }
}

void SetMlp(ParameterStore& store, const std::string& prefix, double out_bias) {
  store.Get(prefix + "/w1").value.Fill(0.0);
  store.Get(prefix + "/w2").value.Fill(0.0);
  store.Get(prefix + "/b2").value.Fill(out_bias);
}

}  // namespace

TEST_CASE("refined scores follow the hierarchy exactly") {
  const LabelHierarchy h = SizedHierarchy(6, 320);
  Rng rng(7);
  for (int draw = 0; draw < 1000; ++draw) {
    Graph g;
    ScoreSheet s = RefineScores(g, g.Constant(RandomTensor({6}, rng)), g.Constant(RandomTensor({320}, rng)), h);
    const ScoreValues v = Values(g, s);
    REQUIRE(v.refined1 == v.basic1);
    for (std::size_t q = 0; q < 320; ++q) {
      REQUIRE(v.refined2[q] == v.basic1[h.parent(q)] + v.basic2[q]);
    }
  }

  Graph g;
  const LabelHierarchy small = SizedHierarchy(2, 2);
  ScoreSheet s = RefineScores(g, g.Constant(Tensor::Vector({0.5, -1.0})), g.Constant(Tensor::Vector({0.2, 0.0})),
                              small);
  CHECK(g.value(s.refined2)[0] == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(g.value(s.refined2)[1] == -1.0);
  CHECK(KindOf([&] { RefineScores(g, g.Constant(Tensor({3})), g.Constant(Tensor({2})), small); }) ==
        ErrorKind::kConfig);
}

TEST_CASE("shifting parent scores shifts children and keeps sibling order") {
  const LabelHierarchy h = SizedHierarchy(3, 12);
  Rng rng(11);
  for (int draw = 0; draw < 100; ++draw) {
    const Tensor b1 = RandomTensor({3}, rng), b2 = RandomTensor({12}, rng);
    Tensor shifted = b1;
    for (auto& v : shifted.data()) v += 2.5;
    Graph g;
    const auto a = Values(g, RefineScores(g, g.Constant(b1), g.Constant(b2), h));
    const auto b = Values(g, RefineScores(g, g.Constant(shifted), g.Constant(b2), h));
    for (std::size_t p = 0; p < 3; ++p) {
      std::size_t best_a = 0, best_b = 0;
      double max_a = -1e300, max_b = -1e300;
      for (std::size_t q = 0; q < 12; ++q) {
        if (h.parent(q) != p) continue;
        CHECK(std::abs(b.refined2[q] - a.refined2[q] - 2.5) < 1e-12);
        if (a.refined2[q] > max_a) max_a = a.refined2[q], best_a = q;
        if (b.refined2[q] > max_b) max_b = b.refined2[q], best_b = q;
      }
      CHECK(best_a == best_b);
    }
  }
}

TEST_CASE("temporal stream") {
  Corpus corpus(TinyCorpus(), "temporal");
  SceneModel model(SmallConfig(), corpus.manifest.dims, corpus.manifest.hierarchy, corpus.kg);
  auto& store = model.params();
  const Example& e = corpus.train[0];
  const std::size_t n = corpus.manifest.dims.n_frames;

  SUBCASE("frame features are normalized rows") {
    Graph g;
    const Tensor& f = g.value(model.temporal().FrameGlobals(g, store, e.features));
    CHECK(f.dims() == Shape{n, 8});
    for (std::size_t j = 0; j < n; ++j) {
      const auto row = f.row(j);
      CHECK(std::abs(std::accumulate(row.begin(), row.end(), 0.0) / 8.0) < 1e-12);
    }
  }
  SUBCASE("identical frames give identical rows") {
    VideoFeatures f = e.features;
    std::copy(f.frame_2d.row(0).begin(), f.frame_2d.row(0).end(), f.frame_2d.row(2).begin());
    std::copy(f.clip_3d.row(0).begin(), f.clip_3d.row(0).end(), f.clip_3d.row(2).begin());
    Graph g;
    const Tensor& out = g.value(model.temporal().FrameGlobals(g, store, f));
    CHECK(std::equal(out.row(0).begin(), out.row(0).end(), out.row(2).begin()));
  }
  SUBCASE("the encoder sees the CLS slot plus every frame") {
    Graph g;
    std::vector<Tensor> attention;
    model.temporal().Encode(g, store, model.temporal().FrameGlobals(g, store, e.features), &attention);
    REQUIRE(attention.size() == 1);
    CHECK(attention[0].dims() == Shape{2, n + 1, n + 1});
  }
  SUBCASE("joint frame and position permutation leaves the video feature unchanged") {
    Rng rng(5);
    const Tensor frames = RandomTensor({n, 8}, rng);
    const std::vector<std::size_t> perm = {2, 0, 3, 1};
    Tensor permuted = frames;
    Tensor& pos = store.Get("temporal/encoder/positions").value;
    const Tensor original_pos = pos;
    for (std::size_t j = 0; j < n; ++j) {
      std::copy(frames.row(perm[j]).begin(), frames.row(perm[j]).end(), permuted.row(j).begin());
      std::copy(original_pos.row(1 + perm[j]).begin(), original_pos.row(1 + perm[j]).end(),
                pos.row(1 + j).begin());
    }
    Graph g1, g2;
    const Tensor b = g2.value(model.temporal().Encode(g2, store, g2.Constant(permuted)));
    pos = original_pos;
    const Tensor a = g1.value(model.temporal().Encode(g1, store, g1.Constant(frames)));
    CHECK(MaxDiff(a.data(), b.data()) <= 1e-9);
  }
  SUBCASE("score widths match the hierarchy") {
    Graph g;
    const auto v = Values(g, model.Temporal(g, e));
    CHECK(v.basic1.size() == 3);
    CHECK(v.refined2.size() == 12);
  }
  SUBCASE("temporal path never touches the other branch") {
    ResetNonTemporalOpCount();
    Graph g;
    model.Temporal(g, e);
    CHECK(NonTemporalOpCount() == 0);
    model.NonTemporal(g, e);
    CHECK(NonTemporalOpCount() > 0);
  }
}

TEST_CASE("zero-layer encoder returns CLS plus its position") {
  Corpus corpus(TinyCorpus(), "zero_layer");
  Config c = SmallConfig();
  c.layers = 0;
  SceneModel model(c, corpus.manifest.dims, corpus.manifest.hierarchy, corpus.kg);
  Graph g;
  auto& store = model.params();
  const Tensor& e = g.value(model.temporal().Encode(g, store, model.temporal().FrameGlobals(g, store, corpus.train[0].features)));
  const Tensor& cls = store.Get("temporal/encoder/cls").value;
  const Tensor& pos = store.Get("temporal/encoder/positions").value;
  for (std::size_t i = 0; i < 8; ++i) CHECK(e[i] == cls[i] + pos.at(0, i));
}

TEST_CASE("non-temporal stream") {
  Corpus corpus(TinyCorpus(), "nontemporal");
  SceneModel model(SmallConfig(), corpus.manifest.dims, corpus.manifest.hierarchy, corpus.kg);
  auto& store = model.params();
  const auto& nt = model.nontemporal();
  const Example& e = WithKeywords(corpus.train);
  const std::size_t n = corpus.manifest.dims.n_frames;
  Rng rng(3);

  SUBCASE("local features share the global contract but not its parameters") {
    Graph g;
    const Tensor global = g.value(model.temporal().FrameGlobals(g, store, e.features));
    const Tensor local = g.value(nt.FrameLocals(g, store, e.features));
    CHECK(local.dims() == Shape{n, 8});
    CHECK(MaxDiff(global.data(), local.data()) > 1e-6);
    CopyParams(store, "temporal/refine", "nontemporal/refine");
    Graph g2;
    CHECK(g2.value(nt.FrameLocals(g2, store, e.features)) == global);
  }
  SUBCASE("region encoder") {
    Graph g;
    std::vector<Tensor> attention;
    const Tensor one = g.value(nt.EncodeRegions(g, store, g.Constant(RandomTensor({1, 16}, rng)), &attention));
    CHECK(one.dims() == Shape{1, 8});
    CHECK(attention.at(0)[0] == 1.0);

    const Tensor regions = RandomTensor({5, 16}, rng);
    const std::vector<std::size_t> perm = {4, 2, 0, 1, 3};
    Tensor permuted = regions;
    for (std::size_t m = 0; m < 5; ++m) {
      std::copy(regions.row(perm[m]).begin(), regions.row(perm[m]).end(), permuted.row(m).begin());
    }
    const Tensor a = g.value(nt.EncodeRegions(g, store, g.Constant(regions)));
    const Tensor b = g.value(nt.EncodeRegions(g, store, g.Constant(permuted)));
    for (std::size_t m = 0; m < 5; ++m) CHECK(MaxDiff(a.row(perm[m]), b.row(m)) <= 1e-9);

    Tensor equal({3, 16});
    for (std::size_t m = 0; m < 3; ++m) std::copy(regions.row(0).begin(), regions.row(0).end(), equal.row(m).begin());
    const Tensor c = g.value(nt.EncodeRegions(g, store, g.Constant(equal)));
    CHECK(MaxDiff(c.row(0), c.row(1)) <= 1e-12);
    CHECK(MaxDiff(c.row(0), c.row(2)) <= 1e-12);
  }
  SUBCASE("frame fusion") {
    Graph g;
    const Tensor region = RandomTensor({8}, rng);
    Tensor same({4, 8});
    for (std::size_t m = 0; m < 4; ++m) std::copy(region.data().begin(), region.data().end(), same.row(m).begin());
    auto out = nt.FuseFrame(g, store, g.Constant(RandomTensor({8}, rng)), g.Constant(same));
    const Tensor v = g.value(g.Linear(g.Constant(region), g.Param(store, "nontemporal/fusion/wv")));
    CHECK(MaxDiff(g.value(out.output).data(), v.data()) <= 1e-12);

    auto random = nt.FuseFrame(g, store, g.Constant(RandomTensor({8}, rng)), g.Constant(RandomTensor({6, 8}, rng)));
    const auto w = random.weights.data();
    CHECK(std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0) <= 1e-6);
  }
  SUBCASE("frames without regions pass through") {
    Example holes = e;
    holes.features.region_counts[1] = 0;
    Graph g;
    NonTemporalTrace trace;
    model.NonTemporal(g, holes, &trace);
    CHECK(std::ranges::equal(g.value(trace.fused_frames).row(1), g.value(trace.local_frames).row(1)));
    CHECK(!std::ranges::equal(g.value(trace.fused_frames).row(0), g.value(trace.local_frames).row(0)));
    CHECK(trace.region_attention.size() == n - 1);
  }
  SUBCASE("generated cluster parameters") {
    Graph g;
    const Tensor k = RandomTensor({2, 8}, rng);
    Tensor dup = k;
    std::copy(k.row(0).begin(), k.row(0).end(), dup.row(1).begin());
    auto p = nt.GenerateClusterParams(g, store, g.Constant(dup));
    CHECK(std::ranges::equal(g.value(p.w).row(0), g.value(p.w).row(1)));
    CHECK(g.value(p.c)[0] == g.value(p.c)[1]);
    CHECK(std::ranges::equal(g.value(p.z).row(0), g.value(p.z).row(1)));

    SetMlp(store, "nontemporal/gen_w", 0.25);
    SetMlp(store, "nontemporal/gen_c", -1.5);
    SetMlp(store, "nontemporal/gen_z", 0.75);
    auto q = nt.GenerateClusterParams(g, store, g.Constant(k));
    for (double v : g.value(q.w).data()) CHECK(v == 0.25);
    for (double v : g.value(q.c).data()) CHECK(v == -1.5);
    for (double v : g.value(q.z).data()) CHECK(v == 0.75);
  }
  SUBCASE("downstream loss reaches the center generator") {
    store.ZeroGrad();
    Graph g(Mode::kEval);
    Var loss = StreamLoss(g, model.NonTemporal(g, e), e.level1_targets, e.level2_targets, LossWeights{});
    Backward(g, loss, store);
    const auto grad = store.Get("nontemporal/gen_z/w1").grad.data();
    CHECK(std::any_of(grad.begin(), grad.end(), [](double v) { return v != 0.0; }));
  }
  SUBCASE("keyword soft clustering") {
    Graph g;
    const Tensor frames = RandomTensor({n, 8}, rng);
    auto p = nt.GenerateClusterParams(g, store, g.Constant(RandomTensor({3, 8}, rng)));
    Tensor alpha;
    const Tensor f = g.value(nt.KeywordFeatures(g, p, g.Constant(frames), &alpha));
    CHECK(f.dims() == Shape{3, 8});
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(std::abs(std::accumulate(alpha.row(k).begin(), alpha.row(k).end(), 0.0) - 1.0) < 1e-12);
    }

    const std::vector<std::size_t> perm = {3, 1, 0, 2};
    Tensor permuted = frames;
    for (std::size_t j = 0; j < n; ++j) std::copy(frames.row(perm[j]).begin(), frames.row(perm[j]).end(), permuted.row(j).begin());
    CHECK(MaxDiff(f.data(), g.value(nt.KeywordFeatures(g, p, g.Constant(permuted))).data()) <= 1e-9);

    Tensor single({1, 8});
    std::copy(frames.row(2).begin(), frames.row(2).end(), single.row(0).begin());
    const Tensor s = g.value(nt.KeywordFeatures(g, p, g.Constant(single), &alpha));
    CHECK(alpha.dims() == Shape{3, 1});
    for (double a : alpha.data()) CHECK(a == 1.0);
    for (std::size_t k = 0; k < 3; ++k) {
      for (std::size_t i = 0; i < 8; ++i) CHECK(s.at(k, i) == frames.at(2, i) - g.value(p.z).at(k, i));
    }

    SetMlp(store, "nontemporal/gen_w", 0.0);
    auto flat = nt.GenerateClusterParams(g, store, g.Constant(RandomTensor({1, 8}, rng)));
    const Tensor u = g.value(nt.KeywordFeatures(g, flat, g.Constant(frames), &alpha));
    for (double a : alpha.data()) CHECK(a == doctest::Approx(1.0 / n).epsilon(1e-14));
    const Tensor mean = g.value(g.MeanRows(g.Constant(frames)));
    for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(u[i] - (mean[i] - g.value(flat.z)[i])) < 1e-12);
  }
  SUBCASE("video pooling") {
    Graph g;
    const Tensor frames = RandomTensor({n, 8}, rng);
    const Tensor mean = g.value(g.MeanRows(g.Constant(frames)));
    NonTemporalTrace none;
    nt.VideoFeature(g, store, g.Constant(frames), {}, &none);
    CHECK(g.value(none.pooled) == mean);

    SetMlp(store, "nontemporal/gen_w", 0.0);
    const Tensor* kw = e.keyword_vectors[0];
    NonTemporalTrace one;
    const std::vector<const Tensor*> single = {kw};
    nt.VideoFeature(g, store, g.Constant(frames), single, &one);
    auto p = nt.GenerateClusterParams(g, store, g.Constant(Tensor({1, 8}, std::vector<double>(kw->data().begin(), kw->data().end()))));
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(std::abs(g.value(one.pooled)[i] - (2 * mean[i] - g.value(p.z)[i])) < 1e-12);
    }
    NonTemporalTrace three;
    const std::vector<const Tensor*> copies = {kw, kw, kw};
    nt.VideoFeature(g, store, g.Constant(frames), copies, &three);
    CHECK(MaxDiff(g.value(three.video).data(), g.value(one.video).data()) < 1e-12);
  }
  SUBCASE("branch output ignores frame order") {
    const Example shuffled = PermuteFrames(e, {1, 3, 0, 2});
    Graph g1, g2;
    NonTemporalTrace t1, t2;
    const auto a = Values(g1, model.NonTemporal(g1, e, &t1));
    const auto b = Values(g2, model.NonTemporal(g2, shuffled, &t2));
    CHECK(MaxDiff(g1.value(t1.video).data(), g2.value(t2.video).data()) <= 1e-9);
    CHECK(MaxDiff(a.refined1.data(), b.refined1.data()) <= 1e-9);
    CHECK(MaxDiff(a.refined2.data(), b.refined2.data()) <= 1e-9);
  }
  SUBCASE("refinement identities on matching scores") {
    Graph g;
    const auto v = Values(g, model.NonTemporal(g, e));
    CHECK(v.refined1 == v.basic1);
    for (std::size_t q = 0; q < 12; ++q) {
      CHECK(v.refined2[q] == v.basic1[corpus.manifest.hierarchy.parent(q)] + v.basic2[q]);
    }
  }
  SUBCASE("a label added after training scores without new parameters") {
    const Manifest held = LoadManifest(corpus.dir.path() / "heldout.jsonl");
    const KnowledgeStore kg = LoadKnowledge(held);
    SceneModel wide(SmallConfig(), held.dims, corpus.manifest.hierarchy, kg);
    const std::size_t before = wide.params().size();
    const LabelEmbeddings labels = wide.nontemporal().ResolveLabels(held.hierarchy, wide.params());
    CHECK(wide.params().size() == before);
    const auto examples = BuildExamples(held, held.Select(Split::kTest), kg);
    Graph g;
    const auto v = Values(g, wide.nontemporal().Forward(g, wide.params(), examples.at(0), held.hierarchy, labels));
    CHECK(v.refined2.size() == 13);
    CHECK(v.refined2.AllFinite());
  }
}

TEST_CASE("stream gradients match finite differences on two videos") {
  Corpus corpus(TinyCorpus(10, 4), "gradients");
  SceneModel model(SmallConfig(2), corpus.manifest.dims, corpus.manifest.hierarchy, corpus.kg);
  const Example* batch[2] = {&corpus.train[0], &WithKeywords(corpus.train)};
  const LossWeights w;
  auto check = [&](bool temporal) {
    LossBuilder loss = [&](Graph& g, ParameterStore&) {
      Var total = g.Constant(Tensor::Scalar(0.0));
      for (const Example* e : batch) {
        ScoreSheet s = temporal ? model.Temporal(g, *e) : model.NonTemporal(g, *e);
        total = g.Add(total, StreamLoss(g, s, e->level1_targets, e->level2_targets, w));
      }
      return g.Scale(total, 0.5);
    };
    return FiniteDiffCheck(loss, model.params());
  };
  SUBCASE("temporal") {
    const auto r = check(true);
    INFO(r.worst_parameter << "[" << r.worst_index << "]");
    CHECK(r.max_relative_error < 1e-3);
  }
  SUBCASE("non-temporal, generators included") {
    const auto r = check(false);
    INFO(r.worst_parameter << "[" << r.worst_index << "]");
    CHECK(r.max_relative_error < 1e-3);
    CHECK(model.params().Get("nontemporal/gen_w/w1").grad.AllFinite());
  }
}

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

// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <unistd.h>

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "oracles.hpp"
#include "sceneforge/blocks.hpp"
#include "sceneforge/checkpoint.hpp"
#include "sceneforge/diagnostics.hpp"
#include "sceneforge/gradcheck.hpp"
#include "sceneforge/inference.hpp"
#include "sceneforge/kft.hpp"
#include "sceneforge/losses.hpp"
#include "sceneforge/metrics.hpp"
#include "sceneforge/model.hpp"
#include "sceneforge/synthetic.hpp"
#include "sceneforge/trainer.hpp"

namespace fs = std::filesystem;
using namespace sceneforge;

namespace {

using Clock = std::chrono::steady_clock;

double Since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string Fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string Fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

Tensor Random(const Shape& dims, Rng& rng, double stddev = 1.0) {
  Tensor t(dims);
  std::normal_distribution<double> normal(0.0, stddev);
  for (auto& v : t.data()) v = normal(rng);
  return t;
}

Var WeightedSum(Graph& g, Var out, std::uint64_t seed = 99) {
  Rng rng(seed);
  return g.Sum(g.Mul(out, g.Constant(Random(g.value(out).dims(), rng))));
}

double MaxDiff(std::span<const double> a, std::span<const double> b) {
  double m = a.size() == b.size() ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::vector<std::uint8_t> FileBytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<const VideoRecord*> All(const Manifest& m) {
  std::vector<const VideoRecord*> out;
  for (const auto& r : m.records) out.push_back(&r);
  return out;
}

LabelHierarchy PaperSized() {
  std::vector<LabelSpec> l1, l2;
  for (int p = 0; p < 6; ++p) l1.push_back({"P" + std::to_string(p), "", ""});
  for (int c = 0; c < 320; ++c) l2.push_back({"C" + std::to_string(c), "P" + std::to_string(c % 6), ""});
  return LabelHierarchy(l1, l2);
}

// Scratch corpus, loaded.
struct Corpus {
  SyntheticTruth truth;
  Manifest manifest;
  KnowledgeStore kg;
  std::vector<Example> train, val, test;

  Corpus(const SyntheticOptions& o, const fs::path& dir)
      : truth(GenerateSynthetic(o, dir)),
        manifest(LoadManifest(dir / "manifest.jsonl")),
        kg(LoadKnowledge(manifest)),
        train(BuildExamples(manifest, manifest.Select(Split::kTrain), kg)),
        val(BuildExamples(manifest, manifest.Select(Split::kVal), kg)),
        test(BuildExamples(manifest, manifest.Select(Split::kTest), kg)) {}
};

// ---------------------------------------------------------------------------

Outcome GradientFidelity(const fs::path& scratch) {
  const auto start = Clock::now();
  Rng rng(1);
  double primitives = 0.0, blocks = 0.0;
  std::string worst_primitive, worst_block;
  auto track = [](double err, const std::string& name, double* worst, std::string* who) {
    if (err > *worst || who->empty()) {
      *worst = err;
      *who = name;
    }
  };

  using Op = std::function<Var(Graph&, ParameterStore&)>;
  std::vector<std::pair<std::string, Op>> ops = {
      {"linear", [](Graph& g, ParameterStore& s) { return g.Linear(g.Param(s, "a"), g.Param(s, "w"), g.Param(s, "bias")); }},
      {"matmul", [](Graph& g, ParameterStore& s) { return g.MatMul(g.Param(s, "a"), g.Param(s, "b")); }},
      {"add", [](Graph& g, ParameterStore& s) { return g.Add(g.Param(s, "a"), g.Param(s, "c")); }},
      {"sub", [](Graph& g, ParameterStore& s) { return g.Sub(g.Param(s, "a"), g.Param(s, "c")); }},
      {"mul", [](Graph& g, ParameterStore& s) { return g.Mul(g.Param(s, "a"), g.Param(s, "c")); }},
      {"scale", [](Graph& g, ParameterStore& s) { return g.Scale(g.Param(s, "a"), -1.7); }},
      {"add_scalar", [](Graph& g, ParameterStore& s) { return g.AddScalar(g.Param(s, "a"), g.Param(s, "s")); }},
      {"add_row", [](Graph& g, ParameterStore& s) { return g.AddRowVector(g.Param(s, "a"), g.Param(s, "v")); }},
      {"sub_row", [](Graph& g, ParameterStore& s) { return g.SubRowVector(g.Param(s, "a"), g.Param(s, "v")); }},
      {"gelu", [](Graph& g, ParameterStore& s) { return g.Gelu(g.Param(s, "a")); }},
      {"softmax", [](Graph& g, ParameterStore& s) { return g.Softmax(g.Param(s, "a")); }},
      {"layer_norm", [](Graph& g, ParameterStore& s) { return g.LayerNorm(g.Param(s, "a")); }},
      {"layer_norm_affine",
       [](Graph& g, ParameterStore& s) { return g.LayerNorm(g.Param(s, "a"), g.Param(s, "v"), g.Param(s, "u")); }},
      {"concat", [](Graph& g, ParameterStore& s) {
         const Var parts[] = {g.Param(s, "a"), g.Param(s, "c")};
         return g.ConcatLastDim(parts);
       }},
      {"stack", [](Graph& g, ParameterStore& s) {
         const Var parts[] = {g.Param(s, "v"), g.Param(s, "u")};
         return g.StackRows(parts);
       }},
      {"slice", [](Graph& g, ParameterStore& s) { return g.SliceRows(g.Param(s, "a"), 1, 2); }},
      {"row", [](Graph& g, ParameterStore& s) { return g.Row(g.Param(s, "a"), 2); }},
      {"repeat", [](Graph& g, ParameterStore& s) { return g.RepeatRows(g.Param(s, "v"), 3); }},
      {"mean_rows", [](Graph& g, ParameterStore& s) { return g.MeanRows(g.Param(s, "a")); }},
      {"sum", [](Graph& g, ParameterStore& s) { return g.Sum(g.Param(s, "a")); }},
      {"gather", [](Graph& g, ParameterStore& s) {
         const std::size_t idx[] = {3, 0, 3, 5};
         return g.Gather(g.Param(s, "v"), idx);
       }},
      {"norm2", [](Graph& g, ParameterStore& s) { return g.Norm2(g.Param(s, "a")); }},
      {"multilabel_ce", [](Graph& g, ParameterStore& s) {
         const std::uint8_t pos[] = {1, 0, 0, 1, 0, 1};
         return g.MultiLabelCrossEntropy(g.Param(s, "v"), pos);
       }},
      {"attention", [](Graph& g, ParameterStore& s) {
         return g.Attention(g.Param(s, "a"), g.Param(s, "k"), g.Param(s, "k"), 2).output;
       }},
  };
  for (const auto& [name, op] : ops) {
    ParameterStore store(0);
    store.Add("a", Random({4, 6}, rng));
    store.Add("c", Random({4, 6}, rng));
    store.Add("b", Random({6, 3}, rng));
    store.Add("w", Random({5, 6}, rng));
    store.Add("bias", Random({5}, rng));
    store.Add("k", Random({5, 6}, rng));
    store.Add("v", Random({6}, rng));
    store.Add("u", Random({6}, rng));
    store.Add("s", Random({1}, rng));
    LossBuilder loss = [&, op = op](Graph& g, ParameterStore& s) { return WeightedSum(g, op(g, s)); };
    track(FiniteDiffCheck(loss, store).max_relative_error, name, &primitives, &worst_primitive);
  }
  {
    // Dropout under a frozen train-mode mask.
    ParameterStore store(0);
    store.Add("a", Random({4, 6}, rng));
    LossBuilder loss = [](Graph& g, ParameterStore& s) { return WeightedSum(g, g.Dropout(g.Param(s, "a"), 0.5)); };
    GradCheckOptions opts;
    opts.mode = Mode::kTrain;
    opts.dropout_seed = 7;
    track(FiniteDiffCheck(loss, store, opts).max_relative_error, "dropout", &primitives, &worst_primitive);
  }

  const Tensor x = Random({5, 8}, rng), kv = Random({4, 8}, rng);
  {
    ParameterStore store(1);
    auto block = RefineBlock::Create(store, "refine", 8, 6, 8, 0.4);
    LossBuilder loss = [&](Graph& g, ParameterStore& s) { return WeightedSum(g, block.Forward(g, s, g.ConstantRef(x), 0.5)); };
    track(FiniteDiffCheck(loss, store).max_relative_error, "refine_block", &blocks, &worst_block);
  }
  {
    ParameterStore store(2);
    auto block = AttentionBlock::Create(store, "attention", 8, 2, true, 0.4);
    LossBuilder loss = [&](Graph& g, ParameterStore& s) {
      return WeightedSum(g, block.Forward(g, s, g.ConstantRef(x), g.ConstantRef(kv)).output);
    };
    track(FiniteDiffCheck(loss, store).max_relative_error, "self_attention", &blocks, &worst_block);
  }
  for (bool positions : {true, false}) {
    ParameterStore store(3);
    EncoderOptions o;
    o.width = 8;
    o.heads = 2;
    o.layers = 2;
    o.ff_hidden = 12;
    o.max_positions = positions ? 6 : 0;
    o.cls = positions;
    auto enc = TransformerEncoder::Create(store, "encoder", o, 0.3);
    LossBuilder loss = [&](Graph& g, ParameterStore& s) {
      return WeightedSum(g, positions ? enc.EncodeWithCls(g, s, g.ConstantRef(x), 0.7) : enc.Encode(g, s, g.ConstantRef(x), 0.7));
    };
    track(FiniteDiffCheck(loss, store).max_relative_error, positions ? "transformer_cls" : "transformer_plain", &blocks,
          &worst_block);
  }

  const auto full = CheckModelGradients(Preset("small"), 0, scratch / "gradcheck");
  const double seconds = Since(start);
  const bool pass = primitives < 1e-4 && blocks < 1e-4 && full.max_relative_error < 1e-3 && seconds < 120.0;
  return {pass, Fmt("primitives %.2e (%s) < 1e-4, blocks %.2e (%s) < 1e-4, full objective %.2e (%s) < 1e-3, %.1fs < 120s",
                    primitives, worst_primitive.c_str(), blocks, worst_block.c_str(), full.max_relative_error,
                    full.worst_parameter.c_str(), seconds)};
}

Outcome LossIdentities() {
  Rng rng(2);
  std::normal_distribution<double> normal(0.0, 3.0);
  std::bernoulli_distribution coin(0.4);
  std::uniform_int_distribution<int> width(1, 12);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = width(rng);
    std::vector<double> s(n);
    std::vector<std::uint8_t> p(n);
    double neg = 1.0, pos = 1.0;
    for (int i = 0; i < n; ++i) {
      s[i] = normal(rng);
      p[i] = coin(rng);
      if (p[i]) {
        pos += std::exp(-s[i]);
      } else {
        neg += std::exp(s[i]);
      }
    }
    worst = std::max(worst, std::abs(MultiLabelCrossEntropyBatch({s}, {p}) - (std::log(neg) + std::log(pos))));
  }
  double zero_worst = 0.0;
  for (int npos = 0; npos <= 6; ++npos) {
    for (int nneg = 0; nneg <= 6; ++nneg) {
      if (npos + nneg == 0) continue;
      std::vector<double> s(npos + nneg, 0.0);
      std::vector<std::uint8_t> p(npos + nneg, 0);
      std::fill(p.begin(), p.begin() + npos, 1);
      const double expected = std::log(1.0 + nneg) + std::log(1.0 + npos);
      zero_worst = std::max(zero_worst, std::abs(MultiLabelCrossEntropyBatch({s}, {p}) - expected));
    }
  }
  return {worst <= 1e-10 && zero_worst <= 1e-12,
          Fmt("random max |diff| %.2e <= 1e-10, all-zero max |diff| %.2e <= 1e-12", worst, zero_worst)};
}

Outcome ScoreAlgebra() {
  const LabelHierarchy h = PaperSized();
  Rng rng(3);
  std::size_t violations = 0;
  auto check = [&](const ScoreValues& v) {
    if (!(v.refined1 == v.basic1)) ++violations;
    for (std::size_t q = 0; q < h.level2_size(); ++q) {
      if (v.refined2[q] != v.basic1[h.parent(q)] + v.basic2[q]) ++violations;
    }
  };
  for (int draw = 0; draw < 1000; ++draw) {
    Graph g;
    check(Values(g, RefineScores(g, g.Constant(Random({6}, rng)), g.Constant(Random({320}, rng)), h)));
  }
  // Both score heads, on random video vectors.
  Config cfg = Preset("small");
  cfg.init_std = 0.5;
  FeatureDims dims{4, 4, 4, 4, 4, 2, 8};
  KnowledgeStore kg(8);
  ParameterStore store(0);
  TemporalStream temporal(store, cfg, dims, h);
  NonTemporalStream nontemporal(store, cfg, dims, h, kg);
  for (int draw = 0; draw < 100; ++draw) {
    Graph g;
    Var video = g.Constant(Random({8}, rng));
    check(Values(g, temporal.Score(g, store, video)));
    check(Values(g, nontemporal.Score(g, store, video, h, nontemporal.labels())));
  }
  return {violations == 0, Fmt("%zu violations over 1000 draws plus 200 head outputs (6/320 labels)", violations)};
}

Outcome Symmetry(const fs::path& scratch) {
  SyntheticOptions o;
  o.n_videos = 20;
  o.heldout_videos = 1;
  o.dims.n_frames = 6;
  Corpus corpus(o, scratch / "symmetry");
  Config cfg = Preset("small");
  SceneModel model(cfg, corpus.manifest.dims, corpus.manifest.hierarchy, corpus.kg);
  auto& store = model.params();
  Rng rng(4);
  const std::vector<std::size_t> perm = {4, 2, 5, 0, 3, 1};

  double branch = 0.0;
  for (const Example& e : corpus.train) {
    Example p = e;
    const auto& f = e.features;
    const std::size_t per = f.regions.size() / f.regions.dim(0);
    for (std::size_t j = 0; j < perm.size(); ++j) {
      std::copy(f.frame_2d.row(perm[j]).begin(), f.frame_2d.row(perm[j]).end(), p.features.frame_2d.row(j).begin());
      std::copy(f.clip_3d.row(perm[j]).begin(), f.clip_3d.row(perm[j]).end(), p.features.clip_3d.row(j).begin());
      std::copy_n(f.regions.data().begin() + perm[j] * per, per, p.features.regions.data().begin() + j * per);
      p.features.region_counts[j] = f.region_counts[perm[j]];
    }
    Graph g1, g2;
    NonTemporalTrace t1, t2;
    const auto a = Values(g1, model.NonTemporal(g1, e, &t1));
    const auto b = Values(g2, model.NonTemporal(g2, p, &t2));
    branch = std::max({branch, MaxDiff(g1.value(t1.video).data(), g2.value(t2.video).data()),
                       MaxDiff(a.refined1.data(), b.refined1.data()), MaxDiff(a.refined2.data(), b.refined2.data())});
  }

  double regions = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor r = Random({6, corpus.manifest.dims.d_region}, rng);
    Tensor pr = r;
    for (std::size_t m = 0; m < 6; ++m) std::copy(r.row(perm[m]).begin(), r.row(perm[m]).end(), pr.row(m).begin());
    Graph g;
    const Tensor a = g.value(model.nontemporal().EncodeRegions(g, store, g.Constant(r)));
    const Tensor b = g.value(model.nontemporal().EncodeRegions(g, store, g.Constant(pr)));
    for (std::size_t m = 0; m < 6; ++m) regions = std::max(regions, MaxDiff(a.row(perm[m]), b.row(m)));
  }

  double cls = 0.0;
  Tensor& pos = store.Get("temporal/encoder/positions").value;
  const Tensor original = pos;
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor frames = Random({6, cfg.d_emb}, rng);
    Tensor pf = frames;
    for (std::size_t j = 0; j < 6; ++j) std::copy(frames.row(perm[j]).begin(), frames.row(perm[j]).end(), pf.row(j).begin());
    Graph g1;
    pos = original;
    const Tensor a = g1.value(model.temporal().Encode(g1, store, g1.Constant(frames)));
    for (std::size_t j = 0; j < 6; ++j) {
      std::copy(original.row(1 + perm[j]).begin(), original.row(1 + perm[j]).end(), pos.row(1 + j).begin());
    }
    Graph g2;
    const Tensor b = g2.value(model.temporal().Encode(g2, store, g2.Constant(pf)));
    cls = std::max(cls, MaxDiff(a.data(), b.data()));
  }
  pos = original;

  bool distill = true;
  const LossWeights w;
  for (const Example& e : corpus.val) {
    Graph g;
    const auto t = Values(g, model.Temporal(g, e));
    const auto nt = Values(g, model.NonTemporal(g, e));
    distill = distill && DistillLoss(t, nt, w) == DistillLoss(nt, t, w) && DistillLoss(t, t, w) == 0.0 &&
              DistillLoss(nt, nt, w) == 0.0;
  }
  const bool pass = branch <= 1e-9 && regions <= 1e-9 && cls <= 1e-9 && distill;
  return {pass, Fmt("non-temporal branch %.2e, region encoder %.2e, CLS %.2e (all <= 1e-9), distill symmetric and "
                    "zero on ties: %s",
                    branch, regions, cls, distill ? "yes" : "no")};
}

// The run shared by criteria 5, 6, 7, 9 and 10.
struct MainRun {
  std::unique_ptr<Corpus> corpus;
  std::unique_ptr<SceneModel> model;
  TrainState state;
  TrainReport report;
  fs::path checkpoint;
  double seconds = 0.0;
};

void TrainMainRun(MainRun& run, const fs::path& dir, const std::string& tag) {
  Config cfg;
  cfg.seed = 0;
  cfg.deterministic = true;
  run.model = std::make_unique<SceneModel>(cfg, run.corpus->manifest.dims, run.corpus->manifest.hierarchy, run.corpus->kg);
  run.checkpoint = dir / (tag + ".ck");
  TrainOptions options;
  options.checkpoint = run.checkpoint;
  options.on_epoch = [&](const EpochStats& s) {
    std::printf("# %s epoch %zu objective %.4f (t %.4f nt %.4f distill %.4f) val_f1 %.4f stream_distance %.4f\n",
                tag.c_str(), s.epoch, s.objective, s.temporal, s.nontemporal, s.distill, s.val_f1,
                s.val_stream_distance);
    std::fflush(stdout);
  };
  const auto start = Clock::now();
  run.report = Train(*run.model, run.corpus->train, run.corpus->val, run.state, options);
  run.seconds = Since(start);
}

Outcome EndToEnd(const MainRun& run) {
  const Corpus& c = *run.corpus;
  const auto val = c.manifest.Select(Split::kVal);
  const double oracle = testing::MicroF1(testing::CentroidOracle(c.manifest, c.truth, val), testing::Level2Truth(c.manifest, val));
  const double f1 = run.report.best_val_f1;
  const bool pass = f1 >= 0.90 && f1 >= 0.9 * oracle && run.report.best_epoch <= 50 && run.seconds < 600.0;
  return {pass, Fmt("best val micro-F1 %.4f at epoch %zu of %zu (need >= 0.90 within 50), centroid oracle %.4f "
                    "(need >= 90%% of it), %.0fs < 600s%s",
                    f1, run.report.best_epoch, run.report.epochs.size(), oracle, run.seconds,
                    run.report.stopped_early ? ", stopped early" : "")};
}

Outcome DistillationEffect(const MainRun& run) {
  const double first = run.report.epochs.front().val_stream_distance;
  const double last = run.report.epochs.back().val_stream_distance;
  return {last <= 0.5 * first,
          Fmt("mean stream distance epoch 1 %.4f, final epoch %zu %.4f, ratio %.3f (need <= 0.5)", first,
              run.report.epochs.back().epoch, last, last / first)};
}

double F1At0(const std::vector<std::vector<double>>& scores, const std::vector<Example>& examples) {
  LabelSets pred, truth;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    pred.push_back(SelectThreshold(scores[i], 0.0));
    truth.push_back(examples[i].level2_targets);
  }
  return MicroF1(pred, truth).f1;
}

Outcome InferenceContract(MainRun& run) {
  const auto& test = run.corpus->test;
  ResetNonTemporalOpCount();
  const auto preds = Infer(*run.model, test, Selection::Threshold(0.0));
  const std::uint64_t ops = NonTemporalOpCount();
  const auto t = ScoreExamples(*run.model, test, Stream::kTemporal);
  const auto nt = ScoreExamples(*run.model, test, Stream::kNonTemporal);
  std::vector<std::vector<double>> temporal, averaged;
  for (std::size_t i = 0; i < test.size(); ++i) {
    temporal.push_back(preds[i].scores);
    std::vector<double> avg(t[i].refined2.size());
    for (std::size_t q = 0; q < avg.size(); ++q) avg[q] = 0.5 * (t[i].refined2[q] + nt[i].refined2[q]);
    averaged.push_back(std::move(avg));
  }
  const double f1_t = F1At0(temporal, test), f1_avg = F1At0(averaged, test);
  return {ops == 0 && std::abs(f1_t - f1_avg) <= 0.05,
          Fmt("non-temporal ops during infer %llu (need 0), test F1 temporal %.4f vs averaged %.4f, |diff| %.4f <= 0.05",
              static_cast<unsigned long long>(ops), f1_t, f1_avg, std::abs(f1_t - f1_avg))};
}

Outcome MetricOracles() {
  Rng rng(8);
  std::uniform_int_distribution<int> videos(1, 20), labels(1, 10), grid(-4, 4);
  std::bernoulli_distribution coin(0.3);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = videos(rng), m = labels(rng);
    std::vector<std::vector<double>> scores;
    LabelSets truth, pred;
    for (int v = 0; v < n; ++v) {
      std::vector<double> s(m);
      std::vector<std::uint8_t> t(m), p(m);
      for (int l = 0; l < m; ++l) {
        s[l] = grid(rng) * 0.5;
        t[l] = coin(rng);
        p[l] = coin(rng);
      }
      scores.push_back(s);
      truth.push_back(t);
      pred.push_back(p);
    }
    const auto f = MicroF1(pred, truth);
    const testing::CountOracle counts(pred, truth);
    if (f.f1 != testing::MicroF1(pred, truth) || f.precision != counts.precision() || f.recall != counts.recall()) {
      ++mismatches;
    }
    const auto c = RpAtAccuracy(scores, truth);
    const auto [coverage, threshold] = testing::CoverageOracle(scores, truth, 0.9);
    if (c.coverage != coverage || c.threshold != threshold) ++mismatches;
  }
  return {mismatches == 0, Fmt("%zu mismatches over 1000 instances (micro-F1 and RP@90%%)", mismatches)};
}

Outcome LabelScalability(MainRun& run, const fs::path& corpus_dir) {
  const Manifest held = LoadManifest(corpus_dir / "heldout.jsonl");
  const KnowledgeStore& kg = run.corpus->kg;
  auto& model = *run.model;
  const std::size_t before = model.params().size();
  std::map<std::string, Tensor> snapshot;
  for (const auto& [name, p] : model.params().entries()) snapshot.emplace(name, p.value);
  const LabelEmbeddings labels = model.nontemporal().ResolveLabels(held.hierarchy, model.params());
  const auto target = held.hierarchy.FindLevel2(run.corpus->truth.heldout_label);
  const auto examples = BuildExamples(held, All(held), kg);
  std::size_t relevant = 0, top2 = 0;
  for (const Example& e : examples) {
    if (!e.level2_targets[*target]) continue;
    ++relevant;
    Graph g(Mode::kEval);
    const auto v = Values(g, model.nontemporal().Forward(g, model.params(), e, held.hierarchy, labels));
    std::size_t above = 0;
    for (std::size_t q = 0; q < v.refined2.size(); ++q) above += v.refined2[q] > v.refined2[*target];
    top2 += above < 2;
  }
  bool unchanged = model.params().size() == before;
  for (const auto& [name, p] : model.params().entries()) unchanged = unchanged && snapshot.at(name) == p.value;
  const double rate = relevant ? static_cast<double>(top2) / static_cast<double>(relevant) : 0.0;
  return {unchanged && rate >= 0.70, Fmt("held-out label in top-2 for %zu/%zu videos (%.3f, need >= 0.70) among %zu "
                                         "labels, parameters untouched: %s",
                                         top2, relevant, rate, held.hierarchy.level2_size(), unchanged ? "yes" : "no")};
}

Outcome Persistence(const MainRun& a, const MainRun& b, const fs::path& dir) {
  const bool traces = a.report.step_objectives == b.report.step_objectives;
  const bool checkpoints = FileBytes(a.checkpoint) == FileBytes(b.checkpoint);
  const fs::path again = dir / "resaved.ck";
  SaveCheckpoint(again, LoadCheckpoint(a.checkpoint));
  const bool round_trip = FileBytes(a.checkpoint) == FileBytes(again);

  Rng rng(10);
  std::uniform_int_distribution<int> rank(1, 3), extent(1, 9);
  std::size_t kft_failures = 0;
  for (int trial = 0; trial < 500; ++trial) {
    Shape dims(rank(rng));
    for (auto& d : dims) d = extent(rng);
    Tensor t = Random(dims, rng, 1e3);
    const bool f32 = trial % 2 == 1;
    if (f32) {
      for (auto& v : t.data()) v = static_cast<float>(v);
    }
    const auto dtype = f32 ? kft::DType::kF32 : kft::DType::kF64;
    const auto bytes = kft::Encode(t, dtype);
    const auto back = kft::Decode(bytes.data(), bytes.size());
    if (!(back.tensor == t) || back.dtype != dtype || kft::Encode(back.tensor, dtype) != bytes) ++kft_failures;
  }
  return {traces && checkpoints && round_trip && kft_failures == 0,
          Fmt("loss traces identical: %s (%zu steps), checkpoints identical: %s, checkpoint re-save identical: %s, "
              "KFT1 fuzz failures %zu/500",
              traces ? "yes" : "no", a.report.step_objectives.size(), checkpoints ? "yes" : "no",
              round_trip ? "yes" : "no", kft_failures)};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const fs::path scratch = fs::temp_directory_path() / ("sceneforge_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(scratch);
  int failed = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  };

  report(1, "gradient fidelity", [&] { return GradientFidelity(scratch); });
  report(2, "loss identities", LossIdentities);
  report(3, "score-sheet algebra", ScoreAlgebra);
  report(4, "symmetry suite", [&] { return Symmetry(scratch); });

  // 600 videos, seed 0, noise 0.5, default model and optimizer settings.
  const fs::path corpus_dir = scratch / "synthetic";
  MainRun run, rerun;
  std::string setup_error;
  try {
    run.corpus = std::make_unique<Corpus>(SyntheticOptions{}, corpus_dir);
    TrainMainRun(run, scratch, "run");
  } catch (const std::exception& e) {
    setup_error = e.what();
  }
  auto needs_run = [&](const std::function<Outcome()>& fn) {
    return [&, fn] { return setup_error.empty() ? fn() : Outcome{false, "training run failed: " + setup_error}; };
  };
  report(5, "synthetic end-to-end", needs_run([&] { return EndToEnd(run); }));
  report(6, "distillation effect", needs_run([&] { return DistillationEffect(run); }));
  report(7, "inference contract", needs_run([&] { return InferenceContract(run); }));
  report(8, "metric oracles", MetricOracles);
  report(9, "label scalability", needs_run([&] { return LabelScalability(run, corpus_dir); }));
  report(10, "determinism and persistence", needs_run([&] {
           rerun.corpus = std::make_unique<Corpus>(SyntheticOptions{}, scratch / "synthetic_again");
           TrainMainRun(rerun, scratch, "rerun");
           return Persistence(run, rerun, scratch);
         }));

  std::printf("%d of 10 criteria failed\n", failed);
  std::error_code ec;
  fs::remove_all(scratch, ec);
  return failed;
}

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

#include "sceneforge/trainer.hpp"

#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "sceneforge/checkpoint.hpp"
#include "sceneforge/error.hpp"
#include "sceneforge/inference.hpp"
#include "sceneforge/losses.hpp"
#include "sceneforge/parallel.hpp"

namespace sceneforge {

namespace {

using Clock = std::chrono::steady_clock;

double Since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t Mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct VideoLoss {
  std::unique_ptr<Graph> graph;
  ObjectiveParts parts;
};

double ValidationF1(SceneModel& model, const std::vector<Example>& val, std::size_t threads) {
  const auto preds = Infer(model, val, Selection::Threshold(0.0), threads);
  LabelSets pred, truth;
  for (std::size_t i = 0; i < val.size(); ++i) {
    pred.push_back(preds[i].selected);
    truth.push_back(val[i].level2_targets);
  }
  return MicroF1(pred, truth).f1;
}

double ValidationDistance(SceneModel& model, const std::vector<Example>& val, std::size_t threads) {
  const auto t = ScoreExamples(model, val, Stream::kTemporal, threads);
  const auto nt = ScoreExamples(model, val, Stream::kNonTemporal, threads);
  double total = 0.0;
  for (std::size_t i = 0; i < val.size(); ++i) total += StreamDistance(t[i], nt[i]);
  return total / static_cast<double>(val.size());
}

}  // namespace

Var VideoObjective(Graph& g, SceneModel& model, const Example& ex, const LossWeights& weights,
                   ObjectiveParts* parts) {
  const ScoreSheet t = model.Temporal(g, ex);
  Var jt = StreamLoss(g, t, ex.level1_targets, ex.level2_targets, weights);
  Var total = g.Scale(jt, weights.beta_t);
  ObjectiveParts local;
  local.temporal = g.value(jt).item();
  if (weights.needs_nontemporal()) {
    const ScoreSheet nt = model.NonTemporal(g, ex);
    Var jnt = StreamLoss(g, nt, ex.level1_targets, ex.level2_targets, weights);
    Var jd = DistillLoss(g, t, nt, weights);
    total = TotalObjective(g, jt, jnt, jd, weights);
    local.nontemporal = g.value(jnt).item();
    local.distill = g.value(jd).item();
  }
  local.objective = g.value(total).item();
  if (parts) *parts = local;
  return total;
}

double StreamDistance(const ScoreValues& a, const ScoreValues& b) {
  Require(a.refined1.size() == b.refined1.size() && a.refined2.size() == b.refined2.size(),
          ErrorKind::kDimension, "score sheets cover different label sets");
  double ss = 0.0;
  for (std::size_t i = 0; i < a.refined1.size(); ++i) ss += std::pow(a.refined1[i] - b.refined1[i], 2);
  for (std::size_t i = 0; i < a.refined2.size(); ++i) ss += std::pow(a.refined2[i] - b.refined2[i], 2);
  return std::sqrt(ss);
}

TrainReport Train(SceneModel& model, const std::vector<Example>& train, const std::vector<Example>& val,
                  TrainState& state, const TrainOptions& options) {
  const Config& cfg = model.config();
  Require(!train.empty(), ErrorKind::kContract, "training split is empty");
  Require(!val.empty(), ErrorKind::kContract, "validation split is empty");
  const LossWeights weights = LossWeights::From(cfg);
  const AdamOptions adam = AdamOptions::From(cfg);
  const std::size_t threads = ResolveThreads(cfg.threads, cfg.deterministic);
  ParameterStore& store = model.params();

  std::mt19937_64 shuffler(cfg.seed);
  if (!state.rng_state.empty()) {
    std::istringstream in(state.rng_state);
    in >> shuffler;
    Require(!in.fail(), ErrorKind::kFormat, "unreadable shuffle generator state");
  }

  TrainReport report;
  report.best_val_f1 = state.best_metric;
  report.best_epoch = state.best_epoch;
  std::map<std::string, Tensor> best_params;
  const auto run_start = Clock::now();
  spdlog::info("training on {} videos ({} validation), {} thread(s)", train.size(), val.size(), threads);

  std::vector<std::size_t> order(train.size());
  while (state.epoch < cfg.max_epochs) {
    const auto epoch_start = Clock::now();
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), shuffler);

    EpochStats stats;
    stats.epoch = state.epoch + 1;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t batch = std::min(cfg.batch_size, order.size() - begin);
      const double inv_batch = 1.0 / static_cast<double>(batch);
      std::vector<VideoLoss> losses(batch);
      ParallelFor(batch, threads, [&](std::size_t i) {
        const Example& ex = train[order[begin + i]];
        VideoLoss& out = losses[i];
        out.graph = std::make_unique<Graph>(Mode::kTrain, Mix(Mix(cfg.seed, state.step), i));
        Graph& g = *out.graph;
        Var total = VideoObjective(g, model, ex, weights, &out.parts);
        if (!std::isfinite(out.parts.objective)) {
          Fail(ErrorKind::kNumeric, "non-finite loss at step " + std::to_string(state.step) + " on video " +
                                        ex.record->video_id + ": " +
                                        g.FirstNonFinite().value_or("no non-finite node recorded"));
        }
        g.Backward(g.Scale(total, inv_batch));
      });

      // Fixed reduction order keeps gradients independent of the thread count.
      store.ZeroGrad();
      double step_objective = 0.0;
      for (auto& l : losses) {
        l.graph->AccumulateParameterGrads(store);
        step_objective += l.parts.objective * inv_batch;
        stats.objective += l.parts.objective;
        stats.temporal += l.parts.temporal;
        stats.nontemporal += l.parts.nontemporal;
        stats.distill += l.parts.distill;
      }
      store.MarkGradsReady();
      losses.clear();
      AdamWStep(store, state, adam);
      report.step_objectives.push_back(step_objective);
    }
    const double n = static_cast<double>(train.size());
    stats.objective /= n;
    stats.temporal /= n;
    stats.nontemporal /= n;
    stats.distill /= n;

    ++state.epoch;
    std::ostringstream rng_out;
    rng_out << shuffler;
    state.rng_state = rng_out.str();

    stats.val_f1 = ValidationF1(model, val, threads);
    stats.val_stream_distance = ValidationDistance(model, val, threads);
    stats.seconds = Since(epoch_start);
    report.epochs.push_back(stats);
    spdlog::info("epoch {} objective {:.5f} (t {:.5f} nt {:.5f} distill {:.5f}) val_f1 {:.4f} "
                 "stream_distance {:.4f} [{:.1f}s]",
                 stats.epoch, stats.objective, stats.temporal, stats.nontemporal, stats.distill, stats.val_f1,
                 stats.val_stream_distance, stats.seconds);
    if (options.on_epoch) options.on_epoch(stats);

    if (stats.val_f1 > state.best_metric) {
      state.best_metric = stats.val_f1;
      state.best_epoch = state.epoch;
      state.patience_counter = 0;
      best_params.clear();
      for (const auto& [name, p] : store.entries()) best_params.emplace(name, p.value);
      if (!options.checkpoint.empty()) {
        SaveCheckpoint(options.checkpoint, Checkpoint::Capture(model, state));
      }
    } else if (++state.patience_counter >= cfg.patience) {
      report.stopped_early = true;
      spdlog::info("no improvement for {} epochs; stopping", cfg.patience);
      break;
    }
  }

  for (auto& [name, value] : best_params) store.Get(name).value = std::move(value);
  report.best_val_f1 = state.best_metric;
  report.best_epoch = state.best_epoch;
  report.seconds = Since(run_start);
  return report;
}

}  // namespace sceneforge

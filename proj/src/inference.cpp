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

#include "sceneforge/inference.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sceneforge/error.hpp"
#include "sceneforge/parallel.hpp"

namespace sceneforge {

namespace {

using Json = nlohmann::ordered_json;

std::vector<double> ToVector(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

// inf is not valid JSON; the report writes it as null.
Json Finite(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json F1Json(const F1Result& r) {
  return {{"f1", r.f1},
          {"precision", r.precision},
          {"recall", r.recall},
          {"true_positives", r.true_positives},
          {"false_positives", r.false_positives},
          {"false_negatives", r.false_negatives}};
}

}  // namespace

std::vector<std::uint8_t> Selection::Apply(const std::vector<double>& scores) const {
  return kind == Kind::kTopK ? SelectTopK(scores, k) : SelectThreshold(scores, threshold);
}

std::string Selection::Describe() const {
  std::ostringstream out;
  if (kind == Kind::kTopK) {
    out << "topk:" << k;
  } else {
    out << "threshold:" << threshold;
  }
  return out.str();
}

std::vector<ScoreValues> ScoreExamples(SceneModel& model, const std::vector<Example>& examples,
                                       Stream stream, std::size_t threads) {
  std::vector<ScoreValues> out(examples.size());
  ParallelFor(examples.size(), threads, [&](std::size_t i) {
    Graph g(Mode::kEval);
    const ScoreSheet sheet =
        stream == Stream::kTemporal ? model.Temporal(g, examples[i]) : model.NonTemporal(g, examples[i]);
    out[i] = Values(g, sheet);
  });
  return out;
}

std::vector<Prediction> Infer(SceneModel& model, const std::vector<Example>& examples,
                              const Selection& selection, std::size_t threads) {
  const auto sheets = ScoreExamples(model, examples, Stream::kTemporal, threads);
  std::vector<Prediction> out;
  out.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    Prediction p;
    p.video_id = examples[i].record->video_id;
    p.level1_scores = ToVector(sheets[i].refined1);
    p.scores = ToVector(sheets[i].refined2);
    for (double s : p.scores) {
      Require(std::isfinite(s), ErrorKind::kNumeric, "non-finite score for video " + p.video_id);
    }
    p.selected = selection.Apply(p.scores);
    out.push_back(std::move(p));
  }
  return out;
}

MetricReport Evaluate(const std::vector<Prediction>& predictions, const std::vector<Example>& examples,
                      const Selection& selection) {
  Require(predictions.size() == examples.size(), ErrorKind::kContract,
          "predictions and examples differ in count");
  Require(!examples.empty(), ErrorKind::kContract, "evaluation over an empty split");
  MetricReport r;
  r.videos = examples.size();
  r.level1_labels = examples[0].level1_targets.size();
  r.level2_labels = examples[0].level2_targets.size();
  r.selection = selection.Describe();
  LabelSets pred2, truth2, pred1, truth1;
  std::vector<std::vector<double>> scores;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    pred2.push_back(predictions[i].selected);
    truth2.push_back(examples[i].level2_targets);
    pred1.push_back(selection.Apply(predictions[i].level1_scores));
    truth1.push_back(examples[i].level1_targets);
    scores.push_back(predictions[i].scores);
  }
  r.level2 = MicroF1(pred2, truth2);
  r.level1 = MicroF1(pred1, truth1);
  r.rp90 = RpAtAccuracy(scores, truth2, 0.9);
  return r;
}

std::string ReportText(const MetricReport& r) {
  std::ostringstream out;
  out.precision(6);
  out << "videos=" << r.videos << "\n"
      << "selection=" << r.selection << "\n"
      << "f1=" << r.level2.f1 << "\n"
      << "precision=" << r.level2.precision << "\n"
      << "recall=" << r.level2.recall << "\n"
      << "rp90=" << r.rp90.coverage << "\n"
      << "rp90_threshold=" << r.rp90.threshold << "\n"
      << "level1_f1=" << r.level1.f1 << "\n"
      << "level1_precision=" << r.level1.precision << "\n"
      << "level1_recall=" << r.level1.recall << "\n"
      << "true_positives=" << r.level2.true_positives << "\n"
      << "false_positives=" << r.level2.false_positives << "\n"
      << "false_negatives=" << r.level2.false_negatives << "\n";
  return out.str();
}

std::string ReportJson(const MetricReport& r) {
  Json j;
  j["videos"] = r.videos;
  j["level1_labels"] = r.level1_labels;
  j["level2_labels"] = r.level2_labels;
  j["selection"] = r.selection;
  j["f1"] = r.level2.f1;
  j["precision"] = r.level2.precision;
  j["recall"] = r.level2.recall;
  j["rp90"] = {{"coverage", r.rp90.coverage},
               {"threshold", Finite(r.rp90.threshold)},
               {"labelled", r.rp90.labelled},
               {"accurate", r.rp90.accurate}};
  j["level2"] = F1Json(r.level2);
  j["level1"] = F1Json(r.level1);
  return j.dump(2) + "\n";
}

void WritePredictions(const std::filesystem::path& path, const std::vector<Prediction>& predictions,
                      const LabelHierarchy& h) {
  std::ofstream out(path, std::ios::trunc);
  Require(static_cast<bool>(out), ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  for (const auto& p : predictions) {
    Require(p.scores.size() == h.level2_size(), ErrorKind::kConfig,
            "prediction for " + p.video_id + " does not match the label hierarchy");
    Json j;
    j["video_id"] = p.video_id;
    j["selected"] = Json::array();
    Json scores = Json::object();
    for (std::size_t q = 0; q < p.scores.size(); ++q) {
      if (p.selected[q]) j["selected"].push_back(h.level2()[q].name);
      scores[h.level2()[q].name] = p.scores[q];
    }
    j["scores"] = std::move(scores);
    out << j.dump() << "\n";
  }
  Require(static_cast<bool>(out), ErrorKind::kIo, "failed writing " + path.string());
}

}  // namespace sceneforge

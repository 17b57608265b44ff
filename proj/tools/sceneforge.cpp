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

// Command-line front end over the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sceneforge/sceneforge.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitRuntime = 2;

int Report(sf_status status) {
  if (status == SF_OK) return kExitOk;
  std::cerr << "sceneforge: " << sf_last_error() << "\n";
  return sf_status_is_input_error(status) ? kExitInput : kExitRuntime;
}

// Owns a string returned by the C API.
struct CString {
  char* p = nullptr;
  ~CString() { sf_free_string(p); }
  std::string str() const { return p ? p : ""; }
};

struct Dataset {
  sf_dataset* p = nullptr;
  ~Dataset() { sf_dataset_free(p); }
};

struct Model {
  sf_model* p = nullptr;
  ~Model() { sf_model_free(p); }
};

bool WriteFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!out) {
    std::cerr << "sceneforge: cannot write " << path << "\n";
    return false;
  }
  return true;
}

struct SelectionFlags {
  double threshold = 0.0;
  unsigned topk = 0;
  CLI::Option* topk_opt = nullptr;

  void Add(CLI::App* cmd) {
    auto* t = cmd->add_option("--threshold", threshold, "Keep labels scoring at least this (default 0)");
    topk_opt = cmd->add_option("--topk", topk, "Keep the K best labels")->check(CLI::PositiveNumber);
    t->excludes(topk_opt);
  }
  sf_selection Get() const {
    sf_selection s{};
    s.use_topk = topk_opt->count() > 0;
    s.threshold = threshold;
    s.topk = topk;
    return s;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stream video scene recognition: training, evaluation and inference"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  std::string synth_out;
  std::uint64_t synth_videos = 600, synth_seed = 0;
  double synth_noise = 0.5;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--videos", synth_videos, "Number of videos")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--noise", synth_noise, "Feature noise level")->check(CLI::NonNegativeNumber);

  // train
  auto* train = app.add_subcommand("train", "Train both streams with early stopping");
  std::string train_manifest, train_config = "synthetic", train_out, train_report;
  std::uint64_t train_seed = 0;
  bool train_deterministic = false;
  train->add_option("--manifest", train_manifest, "Dataset manifest")->required();
  train->add_option("--config", train_config, "Preset (synthetic, small, large) or config file");
  train->add_option("--out,--checkpoint", train_out, "Best-model checkpoint path")->required();
  auto* train_seed_opt = train->add_option("--seed", train_seed, "Override the config seed");
  train->add_flag("--deterministic", train_deterministic, "Single-threaded, bit-reproducible run");
  train->add_option("--report", train_report, "Training report JSON (default: <checkpoint>.train.json)");

  // eval
  auto* eval = app.add_subcommand("eval", "Score a split and report F1 and RP@90%");
  std::string eval_ckpt, eval_manifest, eval_out, eval_split = "test";
  SelectionFlags eval_sel;
  eval->add_option("--checkpoint", eval_ckpt, "Trained checkpoint")->required();
  eval->add_option("--manifest", eval_manifest, "Dataset manifest")->required();
  eval->add_option("--split", eval_split, "train, val, test or all")
      ->check(CLI::IsMember({"train", "val", "test", "all"}));
  eval->add_option("--out", eval_out, "Report path; JSON goes to <out>.json (default: <checkpoint>.eval)");
  eval_sel.Add(eval);

  // infer
  auto* infer = app.add_subcommand("infer", "Write temporal-only predictions as JSONL");
  std::string infer_ckpt, infer_manifest, infer_out, infer_split = "test";
  SelectionFlags infer_sel;
  infer->add_option("--checkpoint", infer_ckpt, "Trained checkpoint")->required();
  infer->add_option("--manifest", infer_manifest, "Dataset manifest")->required();
  infer->add_option("--out", infer_out, "Predictions JSONL path")->required();
  infer->add_option("--split", infer_split, "train, val, test or all")
      ->check(CLI::IsMember({"train", "val", "test", "all"}));
  infer_sel.Add(infer);

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the full objective");
  std::string gc_config = "small";
  std::uint64_t gc_seed = 0;
  double gc_tolerance = 1e-3;
  gradcheck->add_option("--config", gc_config, "Preset or config file");
  gradcheck->add_option("--seed", gc_seed, "Seed for the corpus, parameters and sampling");
  gradcheck->add_option("--tolerance", gc_tolerance, "Largest acceptable relative error");

  // inspect
  auto* inspect = app.add_subcommand("inspect", "Summarize a checkpoint, manifest or KFT1 file");
  std::string inspect_path;
  inspect->add_option("path", inspect_path, "File to inspect");
  inspect->add_option("--checkpoint,--manifest", inspect_path, "File to inspect");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }
  if (quiet) sf_set_log_level(3);

  if (synth->parsed()) {
    const int rc = Report(sf_synth(synth_out.c_str(), synth_videos, synth_seed, synth_noise));
    if (rc == kExitOk) std::cout << "wrote " << synth_videos << " videos to " << synth_out << "\n";
    return rc;
  }

  if (train->parsed()) {
    Dataset ds;
    if (int rc = Report(sf_dataset_open(train_manifest.c_str(), &ds.p))) return rc;
    sf_train_options opt{};
    opt.config = train_config.c_str();
    opt.checkpoint = train_out.c_str();
    opt.seed = train_seed;
    opt.override_seed = train_seed_opt->count() > 0;
    opt.deterministic = train_deterministic;
    CString report;
    if (int rc = Report(sf_train(ds.p, &opt, &report.p))) return rc;
    const std::string report_path = train_report.empty() ? train_out + ".train.json" : train_report;
    if (!WriteFile(report_path, report.str())) return kExitRuntime;
    std::cout << "checkpoint=" << train_out << "\nreport=" << report_path << "\n";
    return kExitOk;
  }

  if (eval->parsed()) {
    Dataset ds;
    Model model;
    if (int rc = Report(sf_dataset_open(eval_manifest.c_str(), &ds.p))) return rc;
    if (int rc = Report(sf_model_load(eval_ckpt.c_str(), ds.p, &model.p))) return rc;
    const sf_selection sel = eval_sel.Get();
    CString text, json;
    const char* split = eval_split == "all" ? nullptr : eval_split.c_str();
    if (int rc = Report(sf_eval(model.p, ds.p, split, &sel, &text.p, &json.p))) return rc;
    const std::string out = eval_out.empty() ? eval_ckpt + ".eval" : eval_out;
    if (!WriteFile(out, text.str()) || !WriteFile(out + ".json", json.str())) return kExitRuntime;
    std::cout << text.str();
    return kExitOk;
  }

  if (infer->parsed()) {
    Dataset ds;
    Model model;
    if (int rc = Report(sf_dataset_open(infer_manifest.c_str(), &ds.p))) return rc;
    if (int rc = Report(sf_model_load(infer_ckpt.c_str(), ds.p, &model.p))) return rc;
    const sf_selection sel = infer_sel.Get();
    std::size_t count = 0;
    const char* split = infer_split == "all" ? nullptr : infer_split.c_str();
    if (int rc = Report(sf_infer(model.p, ds.p, split, &sel, infer_out.c_str(), &count))) return rc;
    std::cout << "wrote " << count << " predictions to " << infer_out << "\n";
    return kExitOk;
  }

  if (gradcheck->parsed()) {
    double err = 0.0;
    CString detail;
    if (int rc = Report(sf_gradcheck(gc_config.c_str(), gc_seed, &err, &detail.p))) return rc;
    std::printf("max_relative_error=%.3e\n%s\n", err, detail.str().c_str());
    if (!(err < gc_tolerance)) {
      std::fprintf(stderr, "sceneforge: gradient check failed: %.3e >= %.3e\n", err, gc_tolerance);
      return kExitRuntime;
    }
    return kExitOk;
  }

  if (inspect->parsed()) {
    if (inspect_path.empty()) {
      std::cerr << "sceneforge: inspect needs a path\n" << inspect->help();
      return kExitInput;
    }
    CString summary;
    if (int rc = Report(sf_inspect(inspect_path.c_str(), &summary.p))) return rc;
    std::cout << summary.str();
    return kExitOk;
  }
  return kExitInput;
}

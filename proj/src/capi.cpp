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

#include "sceneforge/sceneforge.h"

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>

#include <json.hpp>
#include <spdlog/sinks/base_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "sceneforge/checkpoint.hpp"
#include "sceneforge/dataset.hpp"
#include "sceneforge/diagnostics.hpp"
#include "sceneforge/error.hpp"
#include "sceneforge/inference.hpp"
#include "sceneforge/kft.hpp"
#include "sceneforge/parallel.hpp"
#include "sceneforge/synthetic.hpp"
#include "sceneforge/trainer.hpp"

using namespace sceneforge;

struct sf_dataset {
  Manifest manifest;
  KnowledgeStore knowledge;
  std::mutex mu;
  std::map<std::string, std::vector<Example>> examples;  // by split name, built lazily
};

struct sf_model {
  std::shared_ptr<const KnowledgeStore> knowledge;
  std::unique_ptr<SceneModel> model;
};

namespace {

using Json = nlohmann::ordered_json;

thread_local std::string g_last_error;

// A caller mistake at the API boundary, reported as SF_ERR_INVALID_ARGUMENT.
struct BadArgument : std::runtime_error {
  using std::runtime_error::runtime_error;
};

sf_status StatusOf(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension: return SF_ERR_DIMENSION;
    case ErrorKind::kNumeric: return SF_ERR_NUMERIC;
    case ErrorKind::kContract: return SF_ERR_CONTRACT;
    case ErrorKind::kRegistry: return SF_ERR_REGISTRY;
    case ErrorKind::kParse: return SF_ERR_PARSE;
    case ErrorKind::kValidation: return SF_ERR_VALIDATION;
    case ErrorKind::kFormat: return SF_ERR_FORMAT;
    case ErrorKind::kTruncation: return SF_ERR_TRUNCATION;
    case ErrorKind::kVersion: return SF_ERR_VERSION;
    case ErrorKind::kConfig: return SF_ERR_CONFIG;
    case ErrorKind::kIo: return SF_ERR_IO;
  }
  return SF_ERR_INTERNAL;
}

template <typename Fn>
sf_status Guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SF_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return StatusOf(e.kind());
  } catch (const BadArgument& e) {
    g_last_error = std::string("invalid argument: ") + e.what();
    return SF_ERR_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    g_last_error = std::string("internal error: ") + e.what();
    return SF_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "internal error: unknown exception";
    return SF_ERR_INTERNAL;
  }
}

void NeedArg(const void* p, const char* name) {
  if (p == nullptr) throw BadArgument(std::string(name) + " is null");
}

char* Dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

class CallbackSink : public spdlog::sinks::base_sink<std::mutex> {
 public:
  CallbackSink(sf_log_fn fn, void* user) : fn_(fn), user_(user) {}

 protected:
  void sink_it_(const spdlog::details::log_msg& msg) override {
    fn_(static_cast<int>(msg.level), std::string(msg.payload.data(), msg.payload.size()).c_str(), user_);
  }
  void flush_() override {}

 private:
  sf_log_fn fn_;
  void* user_;
};

Split SplitArg(const char* name) {
  try {
    return ParseSplit(name);
  } catch (const Error&) {
    throw BadArgument(std::string("unknown split '") + name + "' (expected train, val or test)");
  }
}

const std::vector<Example>& Examples(const sf_dataset& ds_const, const char* split) {
  auto& ds = const_cast<sf_dataset&>(ds_const);
  const std::string key = split == nullptr ? "all" : std::string(split);
  std::lock_guard<std::mutex> lock(ds.mu);
  auto it = ds.examples.find(key);
  if (it != ds.examples.end()) return it->second;
  std::vector<const VideoRecord*> records;
  if (split == nullptr) {
    for (const auto& r : ds.manifest.records) records.push_back(&r);
  } else {
    records = ds.manifest.Select(SplitArg(split));
  }
  return ds.examples.emplace(key, BuildExamples(ds.manifest, records, ds.knowledge)).first->second;
}

Selection ToSelection(const sf_selection* s) {
  if (s == nullptr) return Selection::Threshold(0.0);
  if (s->use_topk) {
    if (s->topk == 0) throw BadArgument("top-k selection needs k >= 1");
    return Selection::TopK(s->topk);
  }
  return Selection::Threshold(s->threshold);
}

void RequireSameHierarchy(const sf_model& m, const sf_dataset& ds) {
  Require(m.model->hierarchy() == ds.manifest.hierarchy, ErrorKind::kConfig,
          "manifest label hierarchy does not match the checkpoint's");
}

std::string TrainReportJson(const TrainReport& r, const Config& cfg) {
  Json j;
  j["config"] = ToText(cfg);
  j["best_epoch"] = r.best_epoch;
  j["best_val_f1"] = r.best_val_f1;
  j["stopped_early"] = r.stopped_early;
  j["seconds"] = r.seconds;
  j["epochs"] = Json::array();
  for (const auto& e : r.epochs) {
    j["epochs"].push_back({{"epoch", e.epoch},
                           {"objective", e.objective},
                           {"temporal", e.temporal},
                           {"nontemporal", e.nontemporal},
                           {"distill", e.distill},
                           {"val_f1", e.val_f1},
                           {"val_stream_distance", e.val_stream_distance},
                           {"seconds", e.seconds}});
  }
  j["step_objectives"] = r.step_objectives;
  return j.dump(2) + "\n";
}

std::string ShapesOf(const std::map<std::string, Tensor>& params) {
  std::ostringstream out;
  for (const auto& [name, t] : params) out << "  " << name << " " << ShapeString(t.dims()) << "\n";
  return out.str();
}

std::string InspectCheckpoint(const std::filesystem::path& path) {
  const Checkpoint c = LoadCheckpoint(path);
  std::size_t scalars = 0;
  for (const auto& [name, t] : c.params) scalars += t.size();
  const FeatureDims& d = c.dims;
  std::ostringstream out;
  out << "checkpoint " << path.string() << "\n"
      << "version=" << int(kCheckpointVersion) << "\n"
      << "epoch=" << c.state.epoch << "\n"
      << "step=" << c.state.step << "\n"
      << "best_metric=" << c.state.best_metric << "\n"
      << "best_epoch=" << c.state.best_epoch << "\n"
      << "level1_labels=" << c.hierarchy.level1_size() << "\n"
      << "level2_labels=" << c.hierarchy.level2_size() << "\n"
      << "dims=" << d.n_frames << " frames, 2d " << d.d2d << ", 3d " << d.d3d << ", text " << d.dtext
      << ", region " << d.d_region << " x " << d.regions_per_frame << ", kg " << d.d_kg << "\n"
      << "parameters=" << c.params.size() << " tensors, " << scalars << " values\n"
      << "optimizer_moments=" << c.state.moments.size() << "\n"
      << "config:\n"
      << ToText(c.config) << "tensors:\n"
      << ShapesOf(c.params);
  return out.str();
}

std::string InspectManifest(const std::filesystem::path& path) {
  const Manifest m = LoadManifest(path);
  std::map<std::string, std::size_t> per_split;
  std::map<std::string, std::size_t> per_label;
  for (const auto& r : m.records) {
    ++per_split[SplitName(r.split)];
    for (const auto& [parent, child] : r.label_paths) ++per_label[child];
  }
  std::ostringstream out;
  out << "manifest " << path.string() << "\n"
      << "records=" << m.records.size() << "\n";
  for (const auto& [split, n] : per_split) out << "split." << split << "=" << n << "\n";
  out << "level1_labels=" << m.hierarchy.level1_size() << "\n"
      << "level2_labels=" << m.hierarchy.level2_size() << "\n"
      << "n_frames=" << m.dims.n_frames << "\n"
      << "kg_embeddings=" << (m.kg_embeddings.empty() ? "(none)" : m.kg_embeddings) << "\n";
  for (const auto& l : m.hierarchy.level2()) {
    out << "label." << l.name << "=" << (per_label.count(l.name) ? per_label[l.name] : 0) << "\n";
  }
  return out.str();
}

std::string InspectTensor(const std::filesystem::path& path) {
  const kft::Header h = kft::ReadHeader(path);
  std::ostringstream out;
  out << "tensor " << path.string() << "\n"
      << "dtype=" << (h.dtype == kft::DType::kF32 ? "f32" : "f64") << "\n"
      << "shape=" << ShapeString(h.dims) << "\n";
  return out.str();
}

}  // namespace

extern "C" {

const char* sf_version(void) { return "0.1.0"; }

const char* sf_status_name(sf_status status) {
  switch (status) {
    case SF_OK: return "ok";
    case SF_ERR_DIMENSION: return "dimension error";
    case SF_ERR_NUMERIC: return "numeric error";
    case SF_ERR_CONTRACT: return "contract error";
    case SF_ERR_REGISTRY: return "registry error";
    case SF_ERR_PARSE: return "parse error";
    case SF_ERR_VALIDATION: return "validation error";
    case SF_ERR_FORMAT: return "format error";
    case SF_ERR_TRUNCATION: return "truncation error";
    case SF_ERR_VERSION: return "version error";
    case SF_ERR_CONFIG: return "config error";
    case SF_ERR_IO: return "io error";
    case SF_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SF_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* sf_last_error(void) { return g_last_error.c_str(); }

int sf_status_is_input_error(sf_status status) {
  switch (status) {
    case SF_ERR_PARSE:
    case SF_ERR_VALIDATION:
    case SF_ERR_FORMAT:
    case SF_ERR_TRUNCATION:
    case SF_ERR_VERSION:
    case SF_ERR_CONFIG:
    case SF_ERR_INVALID_ARGUMENT:
      return 1;
    default:
      return 0;
  }
}

void sf_free_string(char* s) { std::free(s); }

void sf_set_log_callback(sf_log_fn fn, void* user) {
  auto logger = spdlog::default_logger();
  logger->sinks().clear();
  if (fn != nullptr) {
    logger->sinks().push_back(std::make_shared<CallbackSink>(fn, user));
  } else {
    logger->sinks().push_back(std::make_shared<spdlog::sinks::stderr_color_sink_mt>());
  }
}

void sf_set_log_level(int level) {
  spdlog::set_level(static_cast<spdlog::level::level_enum>(std::clamp(level, 0, 6)));
}

sf_status sf_synth(const char* out_dir, uint64_t videos, uint64_t seed, double noise) {
  return Guard([&] {
    NeedArg(out_dir, "out_dir");
    SyntheticOptions opt;
    opt.n_videos = videos;
    opt.seed = seed;
    opt.noise = noise;
    std::filesystem::create_directories(out_dir);
    GenerateSynthetic(opt, out_dir);
  });
}

sf_status sf_dataset_open(const char* manifest_path, sf_dataset** out) {
  return Guard([&] {
    NeedArg(manifest_path, "manifest_path");
    NeedArg(out, "out");
    *out = nullptr;
    auto ds = std::make_unique<sf_dataset>();
    ds->manifest = LoadManifest(manifest_path);
    ds->knowledge = LoadKnowledge(ds->manifest);
    *out = ds.release();
  });
}

void sf_dataset_free(sf_dataset* dataset) { delete dataset; }

size_t sf_dataset_size(const sf_dataset* dataset, const char* split) {
  if (dataset == nullptr) return 0;
  if (split == nullptr) return dataset->manifest.records.size();
  try {
    return dataset->manifest.Select(ParseSplit(split)).size();
  } catch (const std::exception&) {
    return 0;
  }
}

sf_status sf_train(const sf_dataset* dataset, const sf_train_options* options, char** report_json) {
  return Guard([&] {
    NeedArg(dataset, "dataset");
    NeedArg(options, "options");
    NeedArg(options->checkpoint, "options->checkpoint");
    Config cfg = ResolveConfig(options->config ? options->config : "synthetic");
    if (options->override_seed) cfg.seed = options->seed;
    if (options->deterministic) cfg.deterministic = true;
    const auto& train = Examples(*dataset, "train");
    const auto& val = Examples(*dataset, "val");
    SceneModel model(cfg, dataset->manifest.dims, dataset->manifest.hierarchy, dataset->knowledge);
    TrainState state;
    TrainOptions topt;
    topt.checkpoint = options->checkpoint;
    const TrainReport report = Train(model, train, val, state, topt);
    if (report_json != nullptr) *report_json = Dup(TrainReportJson(report, cfg));
  });
}

sf_status sf_model_load(const char* checkpoint_path, const sf_dataset* dataset, sf_model** out) {
  return Guard([&] {
    NeedArg(checkpoint_path, "checkpoint_path");
    NeedArg(dataset, "dataset");
    NeedArg(out, "out");
    *out = nullptr;
    const Checkpoint c = LoadCheckpoint(checkpoint_path);
    auto m = std::make_unique<sf_model>();
    m->knowledge = std::make_shared<const KnowledgeStore>(dataset->knowledge);
    m->model = ModelFromCheckpoint(c, *m->knowledge);
    *out = m.release();
  });
}

void sf_model_free(sf_model* model) { delete model; }

sf_status sf_eval(sf_model* model, const sf_dataset* dataset, const char* split, const sf_selection* selection,
                  char** report_text, char** report_json) {
  return Guard([&] {
    NeedArg(model, "model");
    NeedArg(dataset, "dataset");
    RequireSameHierarchy(*model, *dataset);
    const Selection sel = ToSelection(selection);
    const auto& examples = Examples(*dataset, split);
    const std::size_t threads = ResolveThreads(model->model->config().threads, false);
    const auto preds = Infer(*model->model, examples, sel, threads);
    const MetricReport report = Evaluate(preds, examples, sel);
    if (report_text != nullptr) *report_text = Dup(ReportText(report));
    if (report_json != nullptr) *report_json = Dup(ReportJson(report));
  });
}

sf_status sf_infer(sf_model* model, const sf_dataset* dataset, const char* split, const sf_selection* selection,
                   const char* predictions_path, size_t* count) {
  return Guard([&] {
    NeedArg(model, "model");
    NeedArg(dataset, "dataset");
    NeedArg(predictions_path, "predictions_path");
    RequireSameHierarchy(*model, *dataset);
    const auto& examples = Examples(*dataset, split);
    const std::size_t threads = ResolveThreads(model->model->config().threads, false);
    const auto preds = Infer(*model->model, examples, ToSelection(selection), threads);
    WritePredictions(predictions_path, preds, model->model->hierarchy());
    if (count != nullptr) *count = preds.size();
  });
}

sf_status sf_gradcheck(const char* config, uint64_t seed, double* max_error, char** detail) {
  return Guard([&] {
    NeedArg(max_error, "max_error");
    const Config cfg = ResolveConfig(config ? config : "small");
    const auto scratch = std::filesystem::temp_directory_path() /
                         ("sceneforge-gradcheck-" + std::to_string(::getpid()) + "-" + std::to_string(seed));
    std::filesystem::remove_all(scratch);
    std::filesystem::create_directories(scratch);
    GradCheckResult r;
    try {
      r = CheckModelGradients(cfg, seed, scratch);
    } catch (...) {
      std::filesystem::remove_all(scratch);
      throw;
    }
    std::filesystem::remove_all(scratch);
    *max_error = r.max_relative_error;
    if (detail != nullptr) {
      std::ostringstream out;
      out.precision(6);
      out << "entries=" << r.entries_checked << " worst=" << r.worst_parameter << "[" << r.worst_index
          << "] analytic=" << r.worst_analytic << " numeric=" << r.worst_numeric;
      *detail = Dup(out.str());
    }
  });
}

sf_status sf_inspect(const char* path, char** summary) {
  return Guard([&] {
    NeedArg(path, "path");
    NeedArg(summary, "summary");
    std::ifstream in(path, std::ios::binary);
    Require(static_cast<bool>(in), ErrorKind::kIo, std::string("cannot open ") + path);
    char magic[4] = {};
    in.read(magic, 4);
    std::string text;
    if (in.gcount() == 4 && std::memcmp(magic, "SFCK", 4) == 0) {
      text = InspectCheckpoint(path);
    } else if (in.gcount() == 4 && std::memcmp(magic, "KFT1", 4) == 0) {
      text = InspectTensor(path);
    } else {
      text = InspectManifest(path);
    }
    *summary = Dup(text);
  });
}

}  // extern "C"

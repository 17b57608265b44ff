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

#include "sceneforge/dataset.hpp"

#include <fstream>
#include <map>
#include <json.hpp>
#include <memory>
#include <unordered_set>

#include "sceneforge/error.hpp"
#include "sceneforge/kft.hpp"

namespace sceneforge {

namespace {

using json = nlohmann::json;

std::string At(std::size_t line) { return "manifest line " + std::to_string(line) + ": "; }

template <typename T>
T Field(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  Require(it != obj.end(), ErrorKind::kParse, At(line) + "missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    Fail(ErrorKind::kParse, At(line) + "field '" + key + "' has the wrong type (" + e.what() + ")");
  }
}

template <typename T>
T OptionalField(const json& obj, const char* key, T fallback, std::size_t line) {
  if (!obj.contains(key)) return fallback;
  return Field<T>(obj, key, line);
}

std::vector<LabelSpec> ParseLabels(const json& arr, bool with_parent, std::size_t line) {
  Require(arr.is_array(), ErrorKind::kParse, At(line) + "hierarchy levels must be arrays");
  std::vector<LabelSpec> out;
  for (const auto& item : arr) {
    Require(item.is_object(), ErrorKind::kParse, At(line) + "label entries must be objects");
    LabelSpec spec;
    spec.name = Field<std::string>(item, "name", line);
    if (with_parent) spec.parent = Field<std::string>(item, "parent", line);
    spec.kg_token = OptionalField<std::string>(item, "kg_token", "", line);
    out.push_back(std::move(spec));
  }
  return out;
}

json LabelsJson(const std::vector<LabelSpec>& labels, bool with_parent) {
  json arr = json::array();
  for (const auto& l : labels) {
    json item = {{"name", l.name}};
    if (with_parent) item["parent"] = l.parent;
    if (!l.kg_token.empty()) item["kg_token"] = l.kg_token;
    arr.push_back(std::move(item));
  }
  return arr;
}

class HeaderCache {
 public:
  explicit HeaderCache(const Manifest& m) : manifest_(m) {}

  void Check(const VideoRecord& r, const std::string& rel, const Shape& expected,
             const char* what) {
    const auto path = manifest_.Resolve(rel);
    auto it = cache_.find(path.string());
    if (it == cache_.end()) {
      kft::Header h;
      try {
        h = kft::ReadHeader(path);
      } catch (const Error& e) {
        Fail(ErrorKind::kValidation,
             "video '" + r.video_id + "': " + what + " file unusable: " + e.what());
      }
      it = cache_.emplace(path.string(), h.dims).first;
    }
    Require(it->second == expected, ErrorKind::kValidation,
            "video '" + r.video_id + "': " + what + " has shape " + ShapeString(it->second) +
                ", expected " + ShapeString(expected));
  }

 private:
  const Manifest& manifest_;
  std::map<std::string, Shape> cache_;
};

void ValidateRecord(const Manifest& m, const VideoRecord& r, HeaderCache& headers) {
  const std::string who = "video '" + r.video_id + "': ";
  Require(!r.video_id.empty(), ErrorKind::kValidation, "record with empty video_id");
  Require(r.keywords.size() <= m.max_keywords, ErrorKind::kValidation,
          who + std::to_string(r.keywords.size()) + " keywords exceed the limit of " +
              std::to_string(m.max_keywords));
  Require(!r.label_paths.empty(), ErrorKind::kValidation, who + "no label paths");
  for (const auto& [parent, child] : r.label_paths) {
    auto c = m.hierarchy.FindLevel2(child);
    Require(c.has_value(), ErrorKind::kValidation, who + "unknown level-2 label '" + child + "'");
    auto p = m.hierarchy.FindLevel1(parent);
    Require(p.has_value(), ErrorKind::kValidation, who + "unknown level-1 label '" + parent + "'");
    Require(m.hierarchy.parent(*c) == *p, ErrorKind::kValidation,
            who + "label path (" + parent + ", " + child + ") contradicts the hierarchy, whose parent of '" +
                child + "' is '" + m.hierarchy.level1()[m.hierarchy.parent(*c)].name + "'");
  }
  const auto& d = m.dims;
  if (!r.region_counts.empty()) {
    Require(r.region_counts.size() == d.n_frames, ErrorKind::kValidation,
            who + "region_counts has " + std::to_string(r.region_counts.size()) + " entries for " +
                std::to_string(d.n_frames) + " frames");
    for (auto c : r.region_counts) {
      Require(c <= d.regions_per_frame, ErrorKind::kValidation,
              who + "region count " + std::to_string(c) + " exceeds regions_per_frame");
    }
  }
  headers.Check(r, r.frame_2d, {d.n_frames, d.d2d}, "frame_2d");
  headers.Check(r, r.clip_3d, {d.n_frames, d.d3d}, "clip_3d");
  headers.Check(r, r.text, {d.dtext}, "text");
  headers.Check(r, r.regions, {d.n_frames, d.regions_per_frame, d.d_region}, "regions");
}

}  // namespace

const char* SplitName(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split ParseSplit(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val" || name == "validation") return Split::kVal;
  if (name == "test") return Split::kTest;
  Fail(ErrorKind::kValidation, "unknown split '" + name + "'");
}

std::filesystem::path Manifest::Resolve(const std::string& relative) const {
  return path.parent_path() / relative;
}

std::vector<const VideoRecord*> Manifest::Select(Split split) const {
  std::vector<const VideoRecord*> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(&r);
  }
  return out;
}

Manifest LoadManifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  Require(static_cast<bool>(in), ErrorKind::kIo, "cannot open manifest " + path.string());
  Manifest m;
  m.path = path;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::unordered_set<std::string> ids;
  std::unique_ptr<HeaderCache> headers;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      Fail(ErrorKind::kParse, At(line_no) + "malformed JSON (" + e.what() + ")");
    }
    Require(obj.is_object(), ErrorKind::kParse, At(line_no) + "expected a JSON object");
    if (!have_header) {
      const json& h = obj.contains("hierarchy") ? obj["hierarchy"] : json();
      Require(h.is_object(), ErrorKind::kParse, At(line_no) + "header lacks a 'hierarchy' object");
      auto level1 = ParseLabels(h.value("level1", json()), false, line_no);
      auto level2 = ParseLabels(h.value("level2", json()), true, line_no);
      m.hierarchy = LabelHierarchy(std::move(level1), std::move(level2));
      const json dims = obj.value("dims", json());
      Require(dims.is_object(), ErrorKind::kParse, At(line_no) + "header lacks a 'dims' object");
      m.dims.n_frames = Field<std::size_t>(dims, "n_frames", line_no);
      m.dims.d2d = Field<std::size_t>(dims, "d2d", line_no);
      m.dims.d3d = Field<std::size_t>(dims, "d3d", line_no);
      m.dims.dtext = Field<std::size_t>(dims, "dtext", line_no);
      m.dims.d_region = Field<std::size_t>(dims, "d_region", line_no);
      m.dims.regions_per_frame = Field<std::size_t>(dims, "regions_per_frame", line_no);
      m.dims.d_kg = OptionalField<std::size_t>(dims, "d_kg", 300, line_no);
      for (std::size_t v : {m.dims.n_frames, m.dims.d2d, m.dims.d3d, m.dims.dtext, m.dims.d_region,
                            m.dims.regions_per_frame, m.dims.d_kg}) {
        Require(v > 0, ErrorKind::kValidation, At(line_no) + "feature dimensions must be positive");
      }
      m.max_keywords = OptionalField<std::size_t>(obj, "max_keywords", 10, line_no);
      m.kg_embeddings = OptionalField<std::string>(obj, "kg_embeddings", "", line_no);
      have_header = true;
      headers = std::make_unique<HeaderCache>(m);
      continue;
    }
    VideoRecord r;
    r.video_id = Field<std::string>(obj, "video_id", line_no);
    r.split = ParseSplit(OptionalField<std::string>(obj, "split", "train", line_no));
    r.frame_2d = Field<std::string>(obj, "frame_2d", line_no);
    r.clip_3d = Field<std::string>(obj, "clip_3d", line_no);
    r.text = Field<std::string>(obj, "text", line_no);
    r.regions = Field<std::string>(obj, "regions", line_no);
    r.keywords = OptionalField<std::vector<std::string>>(obj, "keywords", {}, line_no);
    auto labels = Field<std::vector<std::vector<std::string>>>(obj, "labels", line_no);
    for (auto& path : labels) {
      Require(path.size() == 2, ErrorKind::kParse,
              At(line_no) + "label paths must be [parent, child] pairs");
      r.label_paths.emplace_back(std::move(path[0]), std::move(path[1]));
    }
    r.region_counts = OptionalField<std::vector<std::size_t>>(obj, "region_counts", {}, line_no);
    Require(ids.insert(r.video_id).second, ErrorKind::kValidation,
            "video '" + r.video_id + "' appears more than once (line " + std::to_string(line_no) + ")");
    ValidateRecord(m, r, *headers);
    m.records.push_back(std::move(r));
  }
  Require(have_header, ErrorKind::kParse, "manifest " + path.string() + " has no header line");
  return m;
}

void SaveManifest(const Manifest& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  Require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + path.string());
  json header = {
      {"hierarchy",
       {{"level1", LabelsJson(m.hierarchy.level1(), false)},
        {"level2", LabelsJson(m.hierarchy.level2(), true)}}},
      {"dims",
       {{"n_frames", m.dims.n_frames},
        {"d2d", m.dims.d2d},
        {"d3d", m.dims.d3d},
        {"dtext", m.dims.dtext},
        {"d_region", m.dims.d_region},
        {"regions_per_frame", m.dims.regions_per_frame},
        {"d_kg", m.dims.d_kg}}},
      {"max_keywords", m.max_keywords},
  };
  if (!m.kg_embeddings.empty()) header["kg_embeddings"] = m.kg_embeddings;
  out << header.dump() << '\n';
  for (const auto& r : m.records) {
    json labels = json::array();
    for (const auto& [p, c] : r.label_paths) labels.push_back({p, c});
    json rec = {{"video_id", r.video_id},   {"split", SplitName(r.split)},
                {"frame_2d", r.frame_2d},   {"clip_3d", r.clip_3d},
                {"text", r.text},           {"regions", r.regions},
                {"keywords", r.keywords},   {"labels", labels}};
    if (!r.region_counts.empty()) rec["region_counts"] = r.region_counts;
    out << rec.dump() << '\n';
  }
  Require(static_cast<bool>(out), ErrorKind::kIo, "failed writing " + path.string());
}

VideoFeatures LoadFeatures(const Manifest& m, const VideoRecord& r) {
  VideoFeatures f{kft::LoadFile(m.Resolve(r.frame_2d)).tensor, kft::LoadFile(m.Resolve(r.clip_3d)).tensor,
                  kft::LoadFile(m.Resolve(r.text)).tensor, kft::LoadFile(m.Resolve(r.regions)).tensor,
                  r.region_counts};
  if (f.region_counts.empty()) f.region_counts.assign(m.dims.n_frames, m.dims.regions_per_frame);
  return f;
}

void EncodeTargets(const LabelHierarchy& h,
                   const std::vector<std::pair<std::string, std::string>>& paths,
                   std::vector<std::uint8_t>* level1, std::vector<std::uint8_t>* level2) {
  level1->assign(h.level1_size(), 0);
  level2->assign(h.level2_size(), 0);
  for (const auto& [parent, child] : paths) {
    auto p = h.FindLevel1(parent);
    auto c = h.FindLevel2(child);
    Require(p && c, ErrorKind::kValidation, "label path (" + parent + ", " + child + ") is unknown");
    (*level1)[*p] = 1;
    (*level2)[*c] = 1;
  }
}

std::vector<Example> BuildExamples(const Manifest& m, const std::vector<const VideoRecord*>& records,
                                   const KnowledgeStore& knowledge) {
  std::vector<Example> out;
  out.reserve(records.size());
  for (const VideoRecord* r : records) {
    Example e;
    e.record = r;
    e.features = LoadFeatures(m, *r);
    EncodeTargets(m.hierarchy, r->label_paths, &e.level1_targets, &e.level2_targets);
    for (const auto& kw : r->keywords) {
      if (const Tensor* v = knowledge.Lookup(kw, TokenRole::kKeyword, nullptr)) {
        e.keyword_vectors.push_back(v);
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

KnowledgeStore LoadKnowledge(const Manifest& m) {
  if (m.kg_embeddings.empty()) return KnowledgeStore(m.dims.d_kg);
  return KnowledgeStore::LoadText(m.Resolve(m.kg_embeddings), m.dims.d_kg);
}

}  // namespace sceneforge

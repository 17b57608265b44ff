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

#include "sceneforge/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "sceneforge/error.hpp"
#include "sceneforge/kft.hpp"

namespace sceneforge {

namespace {

using Json = nlohmann::ordered_json;

constexpr char kMagic[4] = {'S', 'F', 'C', 'K'};

class Writer {
 public:
  void Bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void Uint(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void Str(const std::string& s, int len_bytes) {
    Uint(s.size(), len_bytes);
    Bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t>& bytes() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  const std::uint8_t* Take(std::size_t n, const char* what) {
    Require(n <= bytes_.size() - pos_, ErrorKind::kTruncation,
            std::string("checkpoint truncated in ") + what);
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint64_t Uint(int bytes, const char* what) {
    const std::uint8_t* p = Take(bytes, what);
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
  }
  std::string Str(int len_bytes, const char* what) {
    const auto n = static_cast<std::size_t>(Uint(len_bytes, what));
    const std::uint8_t* p = Take(n, what);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

Json LabelsJson(const std::vector<LabelSpec>& labels) {
  Json out = Json::array();
  for (const auto& l : labels) {
    Json e = {{"name", l.name}};
    if (!l.parent.empty()) e["parent"] = l.parent;
    if (!l.kg_token.empty()) e["kg_token"] = l.kg_token;
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<LabelSpec> LabelsFromJson(const Json& j) {
  std::vector<LabelSpec> out;
  for (const auto& e : j) {
    out.push_back({e.at("name").get<std::string>(), e.value("parent", std::string()),
                   e.value("kg_token", std::string())});
  }
  return out;
}

std::string MetadataJson(const Checkpoint& c) {
  const FeatureDims& d = c.dims;
  Json meta;
  meta["config"] = ToText(c.config);
  meta["dims"] = {{"n_frames", d.n_frames}, {"d2d", d.d2d},       {"d3d", d.d3d},
                  {"dtext", d.dtext},       {"d_region", d.d_region},
                  {"regions_per_frame", d.regions_per_frame}, {"d_kg", d.d_kg}};
  meta["hierarchy"] = {{"level1", LabelsJson(c.hierarchy.level1())},
                       {"level2", LabelsJson(c.hierarchy.level2())}};
  return meta.dump();
}

void ParseMetadata(const std::string& text, Checkpoint* c) {
  try {
    const Json meta = Json::parse(text);
    c->config = ParseConfig(meta.at("config").get<std::string>());
    const Json& d = meta.at("dims");
    c->dims = {d.at("n_frames").get<std::size_t>(), d.at("d2d").get<std::size_t>(),
               d.at("d3d").get<std::size_t>(),      d.at("dtext").get<std::size_t>(),
               d.at("d_region").get<std::size_t>(), d.at("regions_per_frame").get<std::size_t>(),
               d.at("d_kg").get<std::size_t>()};
    c->hierarchy = LabelHierarchy(LabelsFromJson(meta.at("hierarchy").at("level1")),
                                  LabelsFromJson(meta.at("hierarchy").at("level2")));
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kFormat, std::string("checkpoint metadata: ") + e.what());
  }
}

}  // namespace

Checkpoint Checkpoint::Capture(const SceneModel& model, const TrainState& state) {
  Checkpoint c;
  c.config = model.config();
  c.dims = model.dims();
  c.hierarchy = model.hierarchy();
  c.state = state;
  for (const auto& [name, p] : model.params().entries()) c.params.emplace(name, p.value);
  return c;
}

std::vector<std::uint8_t> EncodeCheckpoint(const Checkpoint& c) {
  std::map<std::string, const Tensor*> blobs;
  for (const auto& [name, t] : c.params) blobs.emplace("param/" + name, &t);
  for (const auto& [name, m] : c.state.moments) {
    blobs.emplace("adam_m/" + name, &m.m);
    blobs.emplace("adam_v/" + name, &m.v);
  }

  Writer w;
  w.Bytes(kMagic, 4);
  w.Uint(kCheckpointVersion, 1);
  w.Str(MetadataJson(c), 8);
  w.Uint(c.state.epoch, 8);
  w.Uint(c.state.step, 8);
  w.Uint(std::bit_cast<std::uint64_t>(c.state.best_metric), 8);
  w.Uint(c.state.best_epoch, 8);
  w.Uint(c.state.patience_counter, 8);
  w.Str(c.state.rng_state, 4);

  std::vector<std::vector<std::uint8_t>> encoded;
  std::size_t index_bytes = 4;
  for (const auto& [name, t] : blobs) {
    encoded.push_back(kft::Encode(*t, kft::DType::kF64));
    index_bytes += 2 + name.size() + 16;
  }
  std::uint64_t offset = w.bytes().size() + index_bytes;
  w.Uint(blobs.size(), 4);
  std::size_t i = 0;
  for (const auto& [name, t] : blobs) {
    Require(name.size() <= 0xffff, ErrorKind::kContract, "tensor name too long: " + name);
    w.Str(name, 2);
    w.Uint(offset, 8);
    w.Uint(encoded[i].size(), 8);
    offset += encoded[i].size();
    ++i;
  }
  for (const auto& blob : encoded) w.Bytes(blob.data(), blob.size());
  return std::move(w.bytes());
}

Checkpoint DecodeCheckpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  Require(std::memcmp(r.Take(4, "magic"), kMagic, 4) == 0, ErrorKind::kFormat,
          "not a checkpoint (bad magic bytes)");
  const auto version = r.Uint(1, "version");
  Require(version == kCheckpointVersion, ErrorKind::kVersion,
          "checkpoint version " + std::to_string(version) + " is not supported (expected " +
              std::to_string(kCheckpointVersion) + ")");
  Checkpoint c;
  ParseMetadata(r.Str(8, "metadata"), &c);
  c.state.epoch = r.Uint(8, "train state");
  c.state.step = r.Uint(8, "train state");
  c.state.best_metric = std::bit_cast<double>(r.Uint(8, "train state"));
  c.state.best_epoch = r.Uint(8, "train state");
  c.state.patience_counter = r.Uint(8, "train state");
  c.state.rng_state = r.Str(4, "generator state");

  const auto count = r.Uint(4, "index");
  struct Entry {
    std::string name;
    std::uint64_t offset, length;
  };
  std::vector<Entry> index;
  for (std::uint64_t i = 0; i < count; ++i) {
    Entry e;
    e.name = r.Str(2, "index");
    e.offset = r.Uint(8, "index");
    e.length = r.Uint(8, "index");
    index.push_back(std::move(e));
  }
  std::uint64_t expected_end = r.pos();
  for (const auto& e : index) {
    Require(e.offset == expected_end, ErrorKind::kFormat, "checkpoint index out of order at " + e.name);
    Require(e.offset <= bytes.size() && e.length <= bytes.size() - e.offset, ErrorKind::kTruncation, "checkpoint truncated in tensor " + e.name);
    std::size_t consumed = 0;
    Tensor t = kft::Decode(bytes.data() + e.offset, e.length, &consumed).tensor;
    Require(consumed == e.length, ErrorKind::kFormat, "checkpoint tensor " + e.name + " has trailing bytes");
    expected_end = e.offset + e.length;

    const auto slash = e.name.find('/');
    Require(slash != std::string::npos, ErrorKind::kFormat, "bad checkpoint tensor name " + e.name);
    const std::string kind = e.name.substr(0, slash), name = e.name.substr(slash + 1);
    if (kind == "param") {
      c.params.emplace(name, std::move(t));
    } else if (kind == "adam_m") {
      c.state.moments[name].m = std::move(t);
    } else if (kind == "adam_v") {
      c.state.moments[name].v = std::move(t);
    } else {
      Fail(ErrorKind::kFormat, "bad checkpoint tensor name " + e.name);
    }
  }
  Require(expected_end == bytes.size(), ErrorKind::kFormat, "trailing bytes after checkpoint tensors");
  for (const auto& [name, m] : c.state.moments) {
    Require(m.m.dims() == m.v.dims() && !m.m.empty(), ErrorKind::kFormat,
            "incomplete optimizer moments for " + name);
  }
  return c;
}

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& c) {
  const auto bytes = EncodeCheckpoint(c);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(static_cast<bool>(out), ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  Require(static_cast<bool>(out), ErrorKind::kIo, "failed writing " + path.string());
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return DecodeCheckpoint(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(e.what()) + " (" + path.string() + ")");
  }
}

void RestoreParameters(const Checkpoint& c, SceneModel& model) {
  Require(c.hierarchy == model.hierarchy(), ErrorKind::kConfig,
          "checkpoint label hierarchy differs from the model's");
  auto& entries = model.params().entries();
  for (const auto& [name, t] : c.params) {
    auto it = entries.find(name);
    Require(it != entries.end(), ErrorKind::kConfig, "checkpoint parameter " + name + " not in model");
    Require(it->second.value.dims() == t.dims(), ErrorKind::kConfig,
            "checkpoint parameter " + name + " has shape " + ShapeString(t.dims()) + ", model expects " +
                ShapeString(it->second.value.dims()));
  }
  for (const auto& [name, p] : entries) {
    Require(c.params.count(name) != 0, ErrorKind::kConfig, "checkpoint lacks parameter " + name);
  }
  for (const auto& [name, t] : c.params) entries.at(name).value = t;
}

std::unique_ptr<SceneModel> ModelFromCheckpoint(const Checkpoint& c, const KnowledgeStore& knowledge) {
  auto model = std::make_unique<SceneModel>(c.config, c.dims, c.hierarchy, knowledge);
  RestoreParameters(c, *model);
  return model;
}

}  // namespace sceneforge

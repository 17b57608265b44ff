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

#include "sceneforge/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <random>

#include "sceneforge/error.hpp"
#include "sceneforge/kft.hpp"

namespace sceneforge {

namespace {

using json = nlohmann::json;
using Vec = std::vector<double>;

constexpr std::size_t kKeywordsPerLabel = 3;
constexpr std::size_t kUnknownKeywords = 3;
constexpr double kParentSpread = 1.5;
constexpr double kChildSpread = 1.0;
constexpr double kKeywordNoise = 0.3;
constexpr double kHeldoutEmbeddingNoise = 0.05;

Vec Gaussian(std::size_t n, double stddev, Rng& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  Vec v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

Vec Plus(const Vec& a, const Vec& b) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

// Random linear map from concept space into a feature space.
struct Projection {
  std::size_t out = 0, in = 0;
  Vec w;
  Projection(std::size_t out_dim, std::size_t in_dim, Rng& rng)
      : out(out_dim), in(in_dim), w(Gaussian(out_dim * in_dim, 1.0 / std::sqrt(in_dim), rng)) {}
  Vec Apply(const Vec& x) const {
    Vec y(out, 0.0);
    for (std::size_t r = 0; r < out; ++r) {
      for (std::size_t c = 0; c < in; ++c) y[r] += w[r * in + c] * x[c];
    }
    return y;
  }
};

void AddNoise(double* v, std::size_t n, double noise, Rng& rng) {
  if (noise == 0.0) return;
  std::normal_distribution<double> normal(0.0, noise);
  for (std::size_t i = 0; i < n; ++i) v[i] += normal(rng);
}

void Save(const std::filesystem::path& dir, const std::string& rel, const Tensor& t) {
  kft::SaveFile(dir / rel, t, kft::DType::kF32);
}

std::string ParentName(std::size_t p) { return "p" + std::to_string(p); }
std::string ChildName(std::size_t p, std::size_t c) {
  return ParentName(p) + ".c" + std::to_string(c);
}

struct Generator {
  const SyntheticOptions& opt;
  const std::filesystem::path& dir;
  Rng rng;
  Projection a2d, a3d, atext, aregion;

  Generator(const SyntheticOptions& o, const std::filesystem::path& d)
      : opt(o),
        dir(d),
        rng(o.seed),
        a2d(o.dims.d2d, o.dims.d_kg, rng),
        a3d(o.dims.d3d, o.dims.d_kg, rng),
        atext(o.dims.dtext, o.dims.d_kg, rng),
        aregion(o.dims.d_region, o.dims.d_kg, rng) {}

  // Writes one video's feature files; `concepts` are its labels' concept
  // vectors and frames cycle through them.
  VideoRecord Video(const std::string& id, const std::vector<const Vec*>& concepts) {
    const auto& d = opt.dims;
    VideoRecord r;
    r.video_id = id;
    r.frame_2d = "features/" + id + ".2d.kft";
    r.clip_3d = "features/" + id + ".3d.kft";
    r.text = "features/" + id + ".text.kft";
    r.regions = "features/" + id + ".regions.kft";

    Tensor f2d({d.n_frames, d.d2d}), f3d({d.n_frames, d.d3d}), text({d.dtext}, 0.0);
    Tensor regions({d.n_frames, d.regions_per_frame, d.d_region}, 0.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t j = 0; j < d.n_frames; ++j) {
      const Vec& c = *concepts[j % concepts.size()];
      Vec v2 = a2d.Apply(c), v3 = a3d.Apply(c);
      AddNoise(v2.data(), v2.size(), opt.noise, rng);
      AddNoise(v3.data(), v3.size(), opt.noise, rng);
      std::ranges::copy(v2, f2d.row(j).begin());
      std::ranges::copy(v3, f3d.row(j).begin());
      std::size_t count = d.regions_per_frame;
      if (unit(rng) < 0.2) count = std::uniform_int_distribution<std::size_t>(0, count - 1)(rng);
      r.region_counts.push_back(count);
      const Vec center = aregion.Apply(c);
      for (std::size_t m = 0; m < count; ++m) {
        double* slot = regions.data().data() + (j * d.regions_per_frame + m) * d.d_region;
        std::copy(center.begin(), center.end(), slot);
        AddNoise(slot, d.d_region, opt.noise, rng);
      }
    }
    Vec mean(d.d_kg, 0.0);
    for (const Vec* c : concepts) {
      for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += (*c)[i] / concepts.size();
    }
    Vec t = atext.Apply(mean);
    AddNoise(t.data(), t.size(), opt.noise, rng);
    std::ranges::copy(t, text.data().begin());

    Save(dir, r.frame_2d, f2d);
    Save(dir, r.clip_3d, f3d);
    Save(dir, r.text, text);
    Save(dir, r.regions, regions);
    return r;
  }

  std::vector<std::string> Keywords(const std::vector<std::string>& labels) {
    std::vector<std::string> out;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) < 0.05) return out;
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 5)(rng);
    for (std::size_t k = 0; k < n; ++k) {
      if (unit(rng) < 0.1) {
        out.push_back("kw.unknown." +
                      std::to_string(std::uniform_int_distribution<std::size_t>(0, kUnknownKeywords - 1)(rng)));
        continue;
      }
      const auto& label = labels[std::uniform_int_distribution<std::size_t>(0, labels.size() - 1)(rng)];
      out.push_back("kw." + label + "." +
                    std::to_string(std::uniform_int_distribution<std::size_t>(0, kKeywordsPerLabel - 1)(rng)));
    }
    return out;
  }
};

json ToJson(const std::map<std::string, Vec>& m) {
  json out = json::object();
  for (const auto& [k, v] : m) out[k] = v;
  return out;
}

}  // namespace

SyntheticTruth GenerateSynthetic(const SyntheticOptions& opt, const std::filesystem::path& dir) {
  Require(opt.n_videos > 0, ErrorKind::kConfig, "synthetic corpus needs at least one video");
  Require(opt.parents > 0 && opt.children_per_parent > 0, ErrorKind::kConfig,
          "synthetic hierarchy needs at least one parent and one child per parent");
  Require(opt.noise >= 0.0, ErrorKind::kConfig, "noise level must be non-negative");
  const auto& d = opt.dims;
  for (std::size_t v : {d.n_frames, d.d2d, d.d3d, d.dtext, d.d_region, d.regions_per_frame, d.d_kg}) {
    Require(v > 0, ErrorKind::kConfig, "synthetic feature dimensions must be positive");
  }
  std::filesystem::create_directories(dir / "features");

  Generator gen(opt, dir);
  SyntheticTruth truth;
  truth.options = opt;
  KnowledgeStore kg(d.d_kg);
  std::vector<LabelSpec> level1, level2;
  std::vector<Vec> child_concepts;
  std::vector<std::size_t> child_parent;
  for (std::size_t p = 0; p < opt.parents; ++p) {
    const Vec parent = Gaussian(d.d_kg, kParentSpread, gen.rng);
    const std::string pname = ParentName(p);
    level1.push_back({pname, "", "kg." + pname});
    truth.concepts[pname] = parent;
    kg.Insert("kg." + pname, Tensor({d.d_kg}, parent));
    for (std::size_t c = 0; c < opt.children_per_parent; ++c) {
      const Vec child = Plus(parent, Gaussian(d.d_kg, kChildSpread, gen.rng));
      const std::string cname = ChildName(p, c);
      // The very last child has no KG entity and trains a fallback embedding.
      const bool last = p + 1 == opt.parents && c + 1 == opt.children_per_parent && c > 0;
      level2.push_back({cname, pname, last ? "" : "kg." + cname});
      if (!last) kg.Insert("kg." + cname, Tensor({d.d_kg}, child));
      truth.concepts[cname] = child;
      child_concepts.push_back(child);
      child_parent.push_back(p);
      for (std::size_t k = 0; k < kKeywordsPerLabel; ++k) {
        kg.Insert("kw." + cname + "." + std::to_string(k),
                  Tensor({d.d_kg}, Plus(child, Gaussian(d.d_kg, kKeywordNoise, gen.rng))));
      }
    }
  }
  // Held-out child of the first parent: features, token and keywords exist,
  // but no training record uses it.
  const Vec heldout = Plus(truth.concepts[ParentName(0)], Gaussian(d.d_kg, kChildSpread, gen.rng));
  truth.heldout_parent = ParentName(0);
  truth.heldout_label = ChildName(0, opt.children_per_parent);
  truth.heldout_token = "kg." + truth.heldout_label;
  truth.heldout_embedding = Plus(heldout, Gaussian(d.d_kg, kHeldoutEmbeddingNoise, gen.rng));
  truth.concepts[truth.heldout_label] = heldout;
  kg.Insert(truth.heldout_token, Tensor({d.d_kg}, truth.heldout_embedding));
  for (std::size_t k = 0; k < kKeywordsPerLabel; ++k) {
    kg.Insert("kw." + truth.heldout_label + "." + std::to_string(k),
              Tensor({d.d_kg}, Plus(heldout, Gaussian(d.d_kg, kKeywordNoise, gen.rng))));
  }
  for (const auto& [name, c] : truth.concepts) {
    Vec f = gen.a2d.Apply(c);
    Vec f3 = gen.a3d.Apply(c);
    f.insert(f.end(), f3.begin(), f3.end());
    truth.frame_centroids[name] = std::move(f);
  }
  for (const auto& l : level1) truth.frame_centroids.erase(l.name);

  Manifest m;
  m.path = dir / "manifest.jsonl";
  m.hierarchy = LabelHierarchy(level1, level2);
  m.dims = d;
  m.max_keywords = 10;
  m.kg_embeddings = "kg.txt";
  const std::size_t n_children = child_concepts.size();
  std::uniform_int_distribution<std::size_t> pick(0, n_children - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t v = 0; v < opt.n_videos; ++v) {
    std::vector<std::size_t> labels = {pick(gen.rng)};
    if (n_children > 1 && unit(gen.rng) < 0.5) {
      std::size_t other = pick(gen.rng);
      while (other == labels[0]) other = pick(gen.rng);
      labels.push_back(other);
    }
    std::vector<const Vec*> concepts;
    std::vector<std::string> names;
    for (auto l : labels) {
      concepts.push_back(&child_concepts[l]);
      names.push_back(level2[l].name);
    }
    char id[32];
    std::snprintf(id, sizeof(id), "v%05zu", v);
    VideoRecord r = gen.Video(id, concepts);
    r.split = v % 10 < 8 ? Split::kTrain : (v % 10 == 8 ? Split::kVal : Split::kTest);
    r.keywords = gen.Keywords(names);
    for (auto l : labels) r.label_paths.emplace_back(level1[child_parent[l]].name, level2[l].name);
    m.records.push_back(std::move(r));
  }
  SaveManifest(m, m.path);

  Manifest held;
  held.path = dir / "heldout.jsonl";
  held.hierarchy = m.hierarchy.WithLevel2({truth.heldout_label, truth.heldout_parent, truth.heldout_token});
  held.dims = d;
  held.max_keywords = m.max_keywords;
  held.kg_embeddings = m.kg_embeddings;
  for (std::size_t v = 0; v < opt.heldout_videos; ++v) {
    char id[32];
    std::snprintf(id, sizeof(id), "h%05zu", v);
    VideoRecord r = gen.Video(id, {&heldout});
    r.split = Split::kTest;
    r.keywords = gen.Keywords({truth.heldout_label});
    r.label_paths.emplace_back(truth.heldout_parent, truth.heldout_label);
    held.records.push_back(std::move(r));
  }
  SaveManifest(held, held.path);
  kg.SaveText(dir / "kg.txt");

  json desc = {
      {"seed", opt.seed},
      {"n_videos", opt.n_videos},
      {"parents", opt.parents},
      {"children_per_parent", opt.children_per_parent},
      {"noise", opt.noise},
      {"heldout_videos", opt.heldout_videos},
      {"dims",
       {d.n_frames, d.d2d, d.d3d, d.dtext, d.d_region, d.regions_per_frame, d.d_kg}},
      {"frame_centroids", ToJson(truth.frame_centroids)},
      {"concepts", ToJson(truth.concepts)},
      {"heldout",
       {{"label", truth.heldout_label},
        {"parent", truth.heldout_parent},
        {"kg_token", truth.heldout_token},
        {"embedding", truth.heldout_embedding}}},
  };
  std::ofstream out(dir / "generator.json");
  out << desc.dump(1) << '\n';
  Require(static_cast<bool>(out), ErrorKind::kIo, "failed writing generator.json");
  return truth;
}

SyntheticTruth LoadSyntheticTruth(const std::filesystem::path& path) {
  std::ifstream in(path);
  Require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
    SyntheticTruth t;
    t.options.seed = j.at("seed").get<std::uint64_t>();
    t.options.n_videos = j.at("n_videos").get<std::size_t>();
    t.options.parents = j.at("parents").get<std::size_t>();
    t.options.children_per_parent = j.at("children_per_parent").get<std::size_t>();
    t.options.noise = j.at("noise").get<double>();
    t.options.heldout_videos = j.at("heldout_videos").get<std::size_t>();
    auto dims = j.at("dims").get<std::vector<std::size_t>>();
    Require(dims.size() == 7, ErrorKind::kParse, "generator dims must have 7 entries");
    t.options.dims = {dims[0], dims[1], dims[2], dims[3], dims[4], dims[5], dims[6]};
    t.frame_centroids = j.at("frame_centroids").get<std::map<std::string, Vec>>();
    t.concepts = j.at("concepts").get<std::map<std::string, Vec>>();
    const auto& h = j.at("heldout");
    t.heldout_label = h.at("label").get<std::string>();
    t.heldout_parent = h.at("parent").get<std::string>();
    t.heldout_token = h.at("kg_token").get<std::string>();
    t.heldout_embedding = h.at("embedding").get<Vec>();
    return t;
  } catch (const json::exception& e) {
    Fail(ErrorKind::kParse, path.string() + ": " + e.what());
  }
}

}  // namespace sceneforge

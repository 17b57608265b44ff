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

#include "sceneforge/knowledge.hpp"

#include <spdlog/spdlog.h>

#include <charconv>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include "sceneforge/error.hpp"

namespace sceneforge {

namespace {

std::vector<std::string_view> SplitSpaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool ParseDouble(std::string_view s, double* out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), *out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

void WarnMissingKeyword(const std::string& token) {
  static std::mutex mu;
  static std::set<std::string> warned;
  std::lock_guard<std::mutex> lock(mu);
  if (warned.insert(token).second) {
    spdlog::warn("keyword '{}' has no knowledge embedding; skipping it", token);
  }
}

}  // namespace

KnowledgeStore KnowledgeStore::LoadText(const std::filesystem::path& path, std::size_t dim) {
  std::ifstream in(path);
  Require(static_cast<bool>(in), ErrorKind::kIo, "cannot open embedding table " + path.string());
  KnowledgeStore store(dim);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = SplitSpaces(line);
    if (fields.empty()) continue;
    if (line_no == 1 && fields.size() == 2) {
      double a = 0, b = 0;
      if (ParseDouble(fields[0], &a) && ParseDouble(fields[1], &b)) continue;
    }
    const std::string where = path.string() + ":" + std::to_string(line_no);
    Require(fields.size() >= 2, ErrorKind::kParse, where + ": token without a vector");
    if (store.dim_ == 0) store.dim_ = fields.size() - 1;
    Require(fields.size() - 1 == store.dim_, ErrorKind::kParse,
            where + ": expected " + std::to_string(store.dim_) + " values, got " +
                std::to_string(fields.size() - 1));
    std::vector<double> values(store.dim_);
    for (std::size_t i = 0; i < store.dim_; ++i) {
      Require(ParseDouble(fields[i + 1], &values[i]), ErrorKind::kParse,
              where + ": bad number '" + std::string(fields[i + 1]) + "'");
    }
    const std::string token(fields[0]);
    Require(store.table_.count(token) == 0, ErrorKind::kParse, where + ": duplicate token " + token);
    store.table_.emplace(token, Tensor({store.dim_}, std::move(values)));
  }
  Require(store.dim_ > 0, ErrorKind::kParse, "embedding table " + path.string() + " is empty");
  return store;
}

void KnowledgeStore::SaveText(const std::filesystem::path& path) const {
  std::ofstream out(path);
  Require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + path.string());
  char buf[32];
  for (const auto& [token, vec] : table_) {
    out << token;
    for (double v : vec.data()) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(end - buf));
    }
    out << '\n';
  }
  Require(static_cast<bool>(out), ErrorKind::kIo, "failed writing " + path.string());
}

void KnowledgeStore::Insert(const std::string& token, Tensor vector) {
  if (dim_ == 0) dim_ = vector.size();
  Require(vector.rank() == 1 && vector.size() == dim_, ErrorKind::kDimension,
          "embedding for '" + token + "' has shape " + ShapeString(vector.dims()) +
              ", store width is " + std::to_string(dim_));
  table_.insert_or_assign(token, std::move(vector));
}

const Tensor* KnowledgeStore::Pretrained(const std::string& token) const {
  auto it = table_.find(token);
  return it == table_.end() ? nullptr : &it->second;
}

const Tensor* KnowledgeStore::Lookup(const std::string& token, TokenRole role,
                                     ParameterStore* params, double init_std) const {
  if (const Tensor* t = Pretrained(token)) return t;
  if (role == TokenRole::kKeyword) {
    WarnMissingKeyword(token);
    return nullptr;
  }
  Require(params != nullptr, ErrorKind::kContract,
          "label '" + token + "' needs a parameter store for its fallback embedding");
  Require(dim_ > 0, ErrorKind::kContract, "knowledge store has no width");
  const std::string name = FallbackName(token);
  if (params->Contains(name)) return &params->Get(name).value;
  return &params->Gaussian(name, {dim_}, init_std);
}

}  // namespace sceneforge

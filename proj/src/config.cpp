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

#include "sceneforge/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "sceneforge/error.hpp"

namespace sceneforge {

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T ParseNumber(const std::string& value, const std::string& where) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  Require(ec == std::errc() && ptr == value.data() + value.size(), ErrorKind::kConfig,
          where + ": '" + value + "' is not a valid number");
  return out;
}

bool ParseBool(const std::string& value, const std::string& where) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  Fail(ErrorKind::kConfig, where + ": '" + value + "' is not a boolean");
}

using Setter = std::function<void(Config&, const std::string&, const std::string&)>;

template <typename T>
Setter Number(T Config::*field) {
  return [field](Config& c, const std::string& v, const std::string& where) {
    c.*field = ParseNumber<T>(v, where);
  };
}

const std::map<std::string, Setter>& Setters() {
  static const std::map<std::string, Setter> setters = {
      {"d_emb", Number(&Config::d_emb)},
      {"heads", Number(&Config::heads)},
      {"layers", Number(&Config::layers)},
      {"region_layers", Number(&Config::region_layers)},
      {"ff_hidden", Number(&Config::ff_hidden)},
      {"keep_prob", Number(&Config::keep_prob)},
      {"init_std", Number(&Config::init_std)},
      {"beta_t", Number(&Config::beta_t)},
      {"beta_nt", Number(&Config::beta_nt)},
      {"beta_distill", Number(&Config::beta_distill)},
      {"beta_level1", Number(&Config::beta_level1)},
      {"beta_level2", Number(&Config::beta_level2)},
      {"beta_distill1", Number(&Config::beta_level1)},
      {"beta_distill2", Number(&Config::beta_level2)},
      {"lr", Number(&Config::lr)},
      {"weight_decay", Number(&Config::weight_decay)},
      {"adam_beta1", Number(&Config::adam_beta1)},
      {"adam_beta2", Number(&Config::adam_beta2)},
      {"adam_eps", Number(&Config::adam_eps)},
      {"batch_size", Number(&Config::batch_size)},
      {"max_epochs", Number(&Config::max_epochs)},
      {"patience", Number(&Config::patience)},
      {"seed", Number(&Config::seed)},
      {"threads", Number(&Config::threads)},
      {"deterministic",
       [](Config& c, const std::string& v, const std::string& where) {
         c.deterministic = ParseBool(v, where);
       }},
  };
  return setters;
}

// The per-level distillation weights are the level weights under another name.
const std::map<std::string, std::string> kAliases = {{"beta_distill1", "beta_level1"},
                                                     {"beta_distill2", "beta_level2"}};

std::string Format(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

Config ParseConfig(const std::string& text, Config base) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  // canonical key -> (spelling used, parsed config holding its value)
  std::map<std::string, std::pair<std::string, Config>> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(line_no);
    const auto eq = line.find('=');
    Require(eq != std::string::npos, ErrorKind::kConfig, where + ": expected key=value");
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    auto it = Setters().find(key);
    Require(it != Setters().end(), ErrorKind::kConfig, where + ": unknown key '" + key + "'");
    const auto alias = kAliases.find(key);
    const std::string canonical = alias == kAliases.end() ? key : alias->second;
    Config probe;
    it->second(probe, value, where);
    if (auto prev = seen.find(canonical); prev != seen.end() && prev->second.first != key) {
      Require(probe == prev->second.second, ErrorKind::kConfig,
              where + ": '" + key + "' conflicts with '" + prev->second.first + "'");
    }
    seen[canonical] = {key, probe};
    it->second(base, value, where);
  }
  ValidateConfig(base);
  return base;
}

Config LoadConfigFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  Require(static_cast<bool>(in), ErrorKind::kIo, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return ParseConfig(ss.str());
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(e.what()) + " (" + path.string() + ")");
  }
}

Config Preset(const std::string& name) {
  Config c;
  if (name == "synthetic" || name == "default") return c;
  if (name == "small") {
    c.d_emb = 8;
    c.heads = 2;
    c.layers = 1;
    c.region_layers = 1;
    c.ff_hidden = 12;
    c.init_std = 0.3;
    c.batch_size = 2;
    c.max_epochs = 3;
    return c;
  }
  if (name == "large") {
    c.d_emb = 768;
    c.heads = 8;
    c.layers = 2;
    return c;
  }
  Fail(ErrorKind::kConfig, "unknown config preset '" + name + "' (expected small, synthetic or large)");
}

Config ResolveConfig(const std::string& name_or_path) {
  if (std::filesystem::is_regular_file(name_or_path)) return LoadConfigFile(name_or_path);
  return Preset(name_or_path);
}

std::string ToText(const Config& c) {
  std::ostringstream out;
  out << "d_emb=" << c.d_emb << '\n'
      << "heads=" << c.heads << '\n'
      << "layers=" << c.layers << '\n'
      << "region_layers=" << c.region_layers << '\n'
      << "ff_hidden=" << c.ff_hidden << '\n'
      << "keep_prob=" << Format(c.keep_prob) << '\n'
      << "init_std=" << Format(c.init_std) << '\n'
      << "beta_t=" << Format(c.beta_t) << '\n'
      << "beta_nt=" << Format(c.beta_nt) << '\n'
      << "beta_distill=" << Format(c.beta_distill) << '\n'
      << "beta_level1=" << Format(c.beta_level1) << '\n'
      << "beta_level2=" << Format(c.beta_level2) << '\n'
      << "lr=" << Format(c.lr) << '\n'
      << "weight_decay=" << Format(c.weight_decay) << '\n'
      << "adam_beta1=" << Format(c.adam_beta1) << '\n'
      << "adam_beta2=" << Format(c.adam_beta2) << '\n'
      << "adam_eps=" << Format(c.adam_eps) << '\n'
      << "batch_size=" << c.batch_size << '\n'
      << "max_epochs=" << c.max_epochs << '\n'
      << "patience=" << c.patience << '\n'
      << "seed=" << c.seed << '\n'
      << "threads=" << c.threads << '\n'
      << "deterministic=" << (c.deterministic ? "true" : "false") << '\n';
  return out.str();
}

void ValidateConfig(const Config& c) {
  auto check = [](bool ok, const std::string& msg) { Require(ok, ErrorKind::kConfig, msg); };
  check(c.d_emb > 0, "d_emb must be positive");
  check(c.heads > 0 && c.d_emb % c.heads == 0, "d_emb must be divisible by heads");
  check(c.keep_prob > 0.0 && c.keep_prob <= 1.0, "keep_prob must be in (0, 1]");
  check(c.init_std > 0.0, "init_std must be positive");
  for (double b : {c.beta_t, c.beta_nt, c.beta_distill, c.beta_level1, c.beta_level2}) {
    check(b >= 0.0 && std::isfinite(b), "loss weights must be finite and non-negative");
  }
  check(c.lr > 0.0 && std::isfinite(c.lr), "lr must be positive");
  check(c.weight_decay >= 0.0, "weight_decay must be non-negative");
  check(c.adam_beta1 >= 0.0 && c.adam_beta1 < 1.0, "adam_beta1 must be in [0, 1)");
  check(c.adam_beta2 >= 0.0 && c.adam_beta2 < 1.0, "adam_beta2 must be in [0, 1)");
  check(c.adam_eps > 0.0, "adam_eps must be positive");
  check(c.batch_size > 0, "batch_size must be positive");
  check(c.max_epochs > 0, "max_epochs must be positive");
  check(c.patience > 0, "patience must be positive");
}

}  // namespace sceneforge

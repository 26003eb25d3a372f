/* Copyright 2026 The BiSR Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "bisr/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace bisr {

namespace fs = std::filesystem;

namespace {

// The parameter names contain dots only, so they are safe file stems.
std::string param_file(std::size_t i, const std::string& name) {
  return std::to_string(i) + "_" + name + ".hst";
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError(key + " must be true or false, got '" + v + "'");
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw ConfigError(key + " must be a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(out);
}

}  // namespace

std::string binarize_list(const NetworkConfig& cfg) {
  std::string out;
  for (Part p : {Part::kEncoder, Part::kBottleneck, Part::kDecoder}) {
    if (!cfg.binarized(p)) continue;
    if (!out.empty()) out += ",";
    out += part_name(p);
  }
  return out.empty() ? "none" : out;
}

void apply_binarize_list(NetworkConfig& cfg, const std::string& list) {
  for (Part p : {Part::kEncoder, Part::kBottleneck, Part::kDecoder}) cfg.set_binarized(p, false);
  if (list == "none" || list.empty()) return;
  if (list == "all") {
    for (Part p : {Part::kEncoder, Part::kBottleneck, Part::kDecoder}) cfg.set_binarized(p, true);
    return;
  }
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    bool found = false;
    for (Part p : {Part::kEncoder, Part::kBottleneck, Part::kDecoder}) {
      if (item == part_name(p)) {
        cfg.set_binarized(p, true);
        found = true;
      }
    }
    if (!found) throw ConfigError("cannot binarize '" + item + "' (expected encoder, bottleneck or decoder)");
  }
}

KeyValues config_entries(const NetworkConfig& cfg) {
  std::ostringstream alpha;
  alpha.precision(17);
  alpha << cfg.ste.alpha;
  return {
      {"channels", std::to_string(cfg.channels)},
      {"n_wavelengths", std::to_string(cfg.n_wavelengths)},
      {"binarize", binarize_list(cfg)},
      {"ste", cfg.ste.name()},
      {"alpha", alpha.str()},
      {"module_style", module_style_name(cfg.module_style)},
      {"sr", cfg.redistribution ? "true" : "false"},
  };
}

NetworkConfig config_from_entries(const std::map<std::string, std::string>& kv) {
  NetworkConfig cfg;
  auto get = [&](const char* k) -> const std::string* {
    auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (auto v = get("channels")) cfg.channels = parse_size("channels", *v);
  if (auto v = get("n_wavelengths")) cfg.n_wavelengths = parse_size("n_wavelengths", *v);
  if (auto v = get("binarize")) apply_binarize_list(cfg, *v);
  double alpha = 1.0;
  if (auto v = get("alpha")) {
    try {
      alpha = std::stod(*v);
    } catch (const std::exception&) {
      throw ConfigError("alpha must be a number, got '" + *v + "'");
    }
  }
  if (auto v = get("ste")) {
    try {
      cfg.ste = SteKind::parse(*v, alpha);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (auto v = get("module_style")) cfg.module_style = parse_module_style(*v);
  if (auto v = get("sr")) cfg.redistribution = parse_bool("sr", *v);
  cfg.validate();
  return cfg;
}

void save_checkpoint(const std::string& dir, Network<float>& net) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  const fs::path root(dir);
  std::ofstream index(root / "index.txt", std::ios::trunc);
  if (!index) throw IoError("cannot write " + (root / "index.txt").string());
  for (const auto& [k, v] : config_entries(net.config())) index << "config " << k << "=" << v << "\n";
  auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    const Shape s = p.value->shape();
    const std::string file = param_file(i, p.name);
    index << "param " << p.name << " " << s.n << " " << s.c << " " << s.h << " " << s.w << " "
          << role_name(p.role) << " " << file << "\n";
    write_hst((root / file).string(), *p.value);
  }
  if (!index) throw IoError("short write to " + (root / "index.txt").string());
}

std::unique_ptr<Network<float>> load_checkpoint(const std::string& dir) {
  const fs::path root(dir);
  const std::string index_path = (root / "index.txt").string();
  std::ifstream index(index_path);
  if (!index) throw IoError("cannot open " + index_path);

  struct Entry {
    std::string name, role, file;
    Shape shape;
  };
  std::map<std::string, std::string> kv;
  std::vector<Entry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(index, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "config") {
      std::string rest;
      std::getline(ls >> std::ws, rest);
      const auto eq = rest.find('=');
      if (eq == std::string::npos) throw IoError(index_path + ":" + std::to_string(lineno) + ": malformed config");
      kv[rest.substr(0, eq)] = rest.substr(eq + 1);
    } else if (tag == "param") {
      Entry e;
      ls >> e.name >> e.shape.n >> e.shape.c >> e.shape.h >> e.shape.w >> e.role >> e.file;
      if (!ls) throw IoError(index_path + ":" + std::to_string(lineno) + ": malformed param line");
      entries.push_back(std::move(e));
    } else {
      throw IoError(index_path + ":" + std::to_string(lineno) + ": unknown record '" + tag + "'");
    }
  }

  auto net = std::make_unique<Network<float>>(config_from_entries(kv), 0);
  auto params = net->parameters();
  if (params.size() != entries.size()) {
    throw IoError(index_path + ": " + std::to_string(entries.size()) + " parameters stored, network has " +
                  std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Entry& e = entries[i];
    auto& p = params[i];
    if (e.name != p.name || e.shape != p.value->shape() || parse_role(e.role) != p.role) {
      throw IoError(index_path + ": parameter " + std::to_string(i) + " is " + e.name + " " + e.shape.str() +
                    ", network expects " + p.name + " " + p.value->shape().str());
    }
    DenseTensor t = read_hst((root / e.file).string());
    if (t.shape() != p.value->shape()) throw IoError(e.file + ": shape " + t.shape().str() + " does not match index");
    *p.value = std::move(t);
  }
  return net;
}

}  // namespace bisr

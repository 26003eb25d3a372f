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

#include "bisr/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "bisr/binarize.hpp"
#include "bisr/bitconv.hpp"
#include "bisr/cassi.hpp"
#include "bisr/checkpoint.hpp"
#include "bisr/network.hpp"
#include "bisr/traineval.hpp"

namespace bisr {

namespace fs = std::filesystem;

namespace {

std::string sig6(double v) {
  std::ostringstream o;
  o << std::setprecision(6) << v;
  return o.str();
}

std::string exact(double v) {
  std::ostringstream o;
  o << std::setprecision(17) << v;
  return o.str();
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

std::string flag(bool v) { return v ? "true" : "false"; }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  return f;
}

/// Written next to every output so that `bisr --config DIR/manifest.txt`
/// repeats the run.
void write_manifest(const std::string& dir, const std::string& command, const KeyValues& entries) {
  auto f = open_out(fs::path(dir) / "manifest.txt");
  f << "# bisr run manifest\n";
  f << "command=" << command << "\n";
  f << "version=" << kToolkitVersion << "\n";
  for (const auto& [k, v] : entries) f << k << "=" << v << "\n";
  if (!f) throw IoError("short write to manifest in " + dir);
}

// ---------------------------------------------------------------------------
// key=value configuration files.

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = line.substr(0, eq);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    std::string value = line.substr(eq + 1);
    value.erase(0, value.find_first_not_of(" \t"));
    out.emplace_back(key, value);
  }
  return out;
}

const std::set<std::string> kSubcommands = {"simulate", "train", "eval", "count", "ste-analyze", "pack-bench"};

/// Removes --config from `args` and appends the file's entries as long
/// flags, skipping any key already present on the command line.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string config_path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ConfigError("--config needs a file");
      config_path = args[i + 1];
      args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + static_cast<long>(i));
      break;
    }
  }
  if (config_path.empty()) return args;

  std::set<std::string> given;
  bool has_command = false;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (kSubcommands.count(a)) has_command = true;
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') - 2));
  }
  for (const auto& [key, value] : read_config_file(config_path)) {
    if (key == "version") continue;
    if (key == "command") {
      if (!has_command) {
        args.insert(args.begin() + 1, value);
        has_command = true;
      }
      continue;
    }
    // empty values stand for options left unset
    if (given.count(key) || value.empty()) continue;
    args.push_back("--" + key + "=" + value);
  }
  return args;
}

// ---------------------------------------------------------------------------
// Shared flag groups.

struct NetFlags {
  std::size_t channels = 28;
  std::size_t bands = 28;
  std::string binarize = "encoder,bottleneck,decoder";
  std::string ste = "tanh";
  double alpha = 1.0;
  bool no_sr = false;
  std::string module_style = "binarized";

  void add(CLI::App* app) {
    app->add_option("--channels", channels, "base channel count C")->capture_default_str();
    app->add_option("--bands", bands, "number of wavelengths")->capture_default_str();
    app->add_option("--binarize", binarize, "binarized parts: encoder,bottleneck,decoder | none")
        ->capture_default_str();
    app->add_option("--ste", ste, "surrogate: clip | quad | quad-verbatim | tanh")->capture_default_str();
    app->add_option("--alpha", alpha, "initial tanh sharpness")->capture_default_str();
    app->add_flag("--no-sr", no_sr, "disable spectral redistribution");
    app->add_option("--module-style", module_style, "reshaping modules: binarized | normal")->capture_default_str();
  }

  NetworkConfig resolve() const {
    NetworkConfig cfg;
    cfg.channels = channels;
    cfg.n_wavelengths = bands;
    apply_binarize_list(cfg, binarize);
    try {
      cfg.ste = SteKind::parse(ste, alpha);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    cfg.module_style = parse_module_style(module_style);
    cfg.redistribution = !no_sr;
    cfg.validate();
    return cfg;
  }

  KeyValues entries() const {
    return {{"channels", std::to_string(channels)}, {"bands", std::to_string(bands)},
            {"binarize", binarize},                 {"ste", ste},
            {"alpha", exact(alpha)},                {"no-sr", flag(no_sr)},
            {"module-style", module_style}};
  }
};

std::uint64_t scene_seed(std::uint64_t seed, std::size_t i) { return seed * 7919u + 1u + i; }
std::uint64_t mask_seed(std::uint64_t seed) { return seed * 7919u + 100003u; }
std::uint64_t eval_scene_seed(std::uint64_t seed, std::size_t i) { return seed * 7919u + 50001u + i; }

std::vector<DenseTensor> read_all(const std::vector<std::string>& files) {
  std::vector<DenseTensor> out;
  for (const auto& f : files) out.push_back(read_hst(f));
  return out;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string scene, mask, out;
  bool synth = false;
  std::uint64_t seed = 0;
  std::size_t height = 64, width = 64, bands = 28, step = kDefaultStep, bit_depth = kDefaultBitDepth;
  bool noise = false;
};

void run_simulate(const SimulateArgs& a, std::ostream& out) {
  DenseTensor scene, mask;
  if (a.synth) {
    scene = synth_scene(a.seed, a.height, a.width, a.bands);
    mask = random_mask(mask_seed(a.seed), a.height, a.width);
  } else {
    if (a.scene.empty() || a.mask.empty()) throw ConfigError("simulate needs --scene and --mask, or --synth");
    scene = read_hst(a.scene);
    mask = read_hst(a.mask);
  }
  if (mask.c() != 1 || mask.n() != 1 || mask.h() != scene.h() || mask.w() != scene.w()) {
    throw DimensionError("mask " + mask.shape().str() + " does not match scene " + scene.shape().str());
  }
  const CassiSystem sys{mask, a.step, scene.c()};
  DenseTensor y = forward_capture(scene, sys);
  if (a.noise) y = add_shot_noise(y, a.bit_depth, a.seed + 2);

  ensure_dir(a.out);
  const fs::path dir(a.out);
  if (a.synth) write_hst((dir / "scene.hst").string(), scene);
  write_hst((dir / "mask.hst").string(), mask);
  write_hst((dir / "measurement.hst").string(), y);
  write_hst((dir / "shifted.hst").string(), shift_back(y, sys));
  write_hst((dir / "shifted_mask.hst").string(), shift_mask(sys));
  write_manifest(a.out, "simulate",
                 {{"scene", a.scene}, {"mask", a.mask}, {"synth", flag(a.synth)}, {"seed", std::to_string(a.seed)},
                  {"height", std::to_string(a.height)}, {"width", std::to_string(a.width)},
                  {"bands", std::to_string(a.bands)}, {"step", std::to_string(a.step)},
                  {"noise", flag(a.noise)}, {"bit-depth", std::to_string(a.bit_depth)}, {"out", a.out}});
  out << "measurement " << y.shape().str() << " written to " << a.out << "\n";
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  NetFlags net;
  TrainConfig tc;
  bool no_noise = false, no_augment = false;
  std::size_t scenes = 4, scene_size = 64;
  std::vector<std::string> scene_files;
  std::string mask, out;
};

void run_train(TrainArgs a, std::ostream& out) {
  const NetworkConfig cfg = a.net.resolve();
  a.tc.noise = !a.no_noise;
  a.tc.augment = !a.no_augment;
  a.tc.validate();

  std::vector<DenseTensor> scenes;
  DenseTensor mask;
  if (!a.scene_files.empty()) {
    if (a.mask.empty()) throw ConfigError("--scene-file needs --mask");
    scenes = read_all(a.scene_files);
    mask = read_hst(a.mask);
  } else {
    for (std::size_t i = 0; i < a.scenes; ++i) {
      scenes.push_back(synth_scene(scene_seed(a.tc.seed, i), a.scene_size, a.scene_size, cfg.n_wavelengths));
    }
    mask = a.mask.empty() ? random_mask(mask_seed(a.tc.seed), a.scene_size, a.scene_size) : read_hst(a.mask);
  }

  Network<float> net(cfg, a.tc.seed);
  const History history = train(net, a.tc, scenes, mask);

  ensure_dir(a.out);
  const fs::path dir(a.out);
  auto csv = open_out(dir / "history.csv");
  csv << "step,lr,loss\n";
  for (const auto& r : history) csv << r.step << "," << sig6(r.lr) << "," << sig6(r.loss) << "\n";
  csv.close();
  save_checkpoint((dir / "checkpoint").string(), net);

  KeyValues m = a.net.entries();
  const KeyValues rest = {{"steps", std::to_string(a.tc.steps)},
                          {"batch", std::to_string(a.tc.batch)},
                          {"lr-max", exact(a.tc.lr_max)},
                          {"lr-min", exact(a.tc.lr_min)},
                          {"patch", std::to_string(a.tc.patch)},
                          {"seed", std::to_string(a.tc.seed)},
                          {"no-noise", flag(a.no_noise)},
                          {"no-augment", flag(a.no_augment)},
                          {"bit-depth", std::to_string(a.tc.bit_depth)},
                          {"step", std::to_string(a.tc.step)},
                          {"scenes", std::to_string(a.scenes)},
                          {"scene-size", std::to_string(a.scene_size)},
                          {"scene-file", join(a.scene_files)},
                          {"mask", a.mask},
                          {"out", a.out}};
  m.insert(m.end(), rest.begin(), rest.end());
  write_manifest(a.out, "train", m);
  if (!history.empty()) {
    out << "trained " << history.size() << " steps, loss " << sig6(history.front().loss) << " -> "
        << sig6(history.back().loss) << "\n";
  }
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::vector<std::string> pred, truth, scene_files;
  std::string checkpoint, mask, out;
  std::size_t synth = 0, scene_size = 64, step = kDefaultStep;
  std::uint64_t seed = 0;
};

void write_eval(std::ostream& os, const EvalTable& t) {
  os << "scene,psnr_db,ssim\n";
  for (const auto& r : t.rows) os << r.scene << "," << sig6(r.psnr_db) << "," << sig6(r.ssim) << "\n";
  os << t.mean.scene << "," << sig6(t.mean.psnr_db) << "," << sig6(t.mean.ssim) << "\n";
}

void run_eval(const EvalArgs& a, std::ostream& out) {
  EvalTable table;
  if (!a.pred.empty() || !a.truth.empty()) {
    if (a.pred.size() != a.truth.size()) throw ConfigError("--pred and --truth need the same number of files");
    std::vector<std::string> names;
    for (const auto& p : a.pred) names.push_back(fs::path(p).stem().string());
    table = score(names, read_all(a.pred), read_all(a.truth));
  } else {
    if (a.checkpoint.empty()) throw ConfigError("eval needs --pred/--truth or --checkpoint");
    auto net = load_checkpoint(a.checkpoint);
    const std::size_t N = net->config().n_wavelengths;
    std::vector<DenseTensor> scenes;
    std::vector<std::string> names;
    DenseTensor mask;
    if (!a.scene_files.empty()) {
      if (a.mask.empty()) throw ConfigError("--scene-file needs --mask");
      scenes = read_all(a.scene_files);
      for (const auto& f : a.scene_files) names.push_back(fs::path(f).stem().string());
      mask = read_hst(a.mask);
    } else {
      if (a.synth == 0) throw ConfigError("eval with a checkpoint needs --scene-file or --synth N");
      for (std::size_t i = 0; i < a.synth; ++i) {
        scenes.push_back(synth_scene(eval_scene_seed(a.seed, i), a.scene_size, a.scene_size, N));
        names.push_back("synth" + std::to_string(i));
      }
      mask = a.mask.empty() ? random_mask(mask_seed(a.seed), a.scene_size, a.scene_size) : read_hst(a.mask);
    }
    table = evaluate(*net, names, scenes, mask, a.step);
  }
  if (a.out.empty()) {
    write_eval(out, table);
    return;
  }
  ensure_dir(a.out);
  auto csv = open_out(fs::path(a.out) / "eval.csv");
  write_eval(csv, table);
  write_manifest(a.out, "eval",
                 {{"pred", join(a.pred)}, {"truth", join(a.truth)}, {"checkpoint", a.checkpoint},
                  {"scene-file", join(a.scene_files)}, {"mask", a.mask}, {"synth", std::to_string(a.synth)},
                  {"scene-size", std::to_string(a.scene_size)}, {"step", std::to_string(a.step)},
                  {"seed", std::to_string(a.seed)}, {"out", a.out}});
  out << "mean psnr " << sig6(table.mean.psnr_db) << " dB, ssim " << sig6(table.mean.ssim) << "\n";
}

// ---------------------------------------------------------------------------
// count

struct CountArgs {
  NetFlags net;
  std::size_t height = 256, width = 256;
  std::string out;
};

void write_count(std::ostream& os, const Accounting& acc) {
  os << "part,binarized,params_f,params_b,ops_f,ops_b,params,ops\n";
  std::uint64_t pf = 0, pb = 0, of = 0, ob = 0;
  for (const auto& p : acc.parts) {
    os << part_name(p.part) << "," << (p.binarized ? 1 : 0) << "," << p.params_f << "," << p.params_b << ","
       << p.ops_f << "," << p.ops_b << "," << p.params() << "," << p.ops() << "\n";
    pf += p.params_f;
    pb += p.params_b;
    of += p.ops_f;
    ob += p.ops_b;
  }
  os << "total,," << pf << "," << pb << "," << of << "," << ob << "," << acc.total_params << "," << acc.total_ops
     << "\n";
}

void run_count(const CountArgs& a, std::ostream& out) {
  const Network<float> net(a.net.resolve(), 0);
  const Accounting acc = net.count(a.height, a.width);
  if (a.out.empty()) {
    write_count(out, acc);
    return;
  }
  ensure_dir(a.out);
  auto csv = open_out(fs::path(a.out) / "count.csv");
  write_count(csv, acc);
  KeyValues m = a.net.entries();
  m.push_back({"height", std::to_string(a.height)});
  m.push_back({"width", std::to_string(a.width)});
  m.push_back({"out", a.out});
  write_manifest(a.out, "count", m);
  out << "total params " << acc.total_params << ", ops " << acc.total_ops << "\n";
}

// ---------------------------------------------------------------------------
// ste-analyze

struct SteArgs {
  std::vector<std::string> kinds = {"clip", "quad", "quad-verbatim", "tanh"};
  double alpha = 1.0;
  std::size_t points = 401;
  double range = 3.0;
  std::string out;
};

void run_ste(const SteArgs& a, std::ostream& out) {
  if (a.points < 2) throw ConfigError("--points must be at least 2");
  if (!(a.range > 0)) throw ConfigError("--range must be positive");
  std::vector<SteKind> kinds;
  for (const auto& k : a.kinds) {
    try {
      kinds.push_back(SteKind::parse(k, a.alpha));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  std::ostringstream areas;
  areas << "kind,alpha,area,area_numeric\n";
  for (const auto& k : kinds) {
    areas << k.name() << "," << sig6(k.alpha) << "," << sig6(approx_error_area(k)) << ","
          << sig6(approx_error_area_numeric(k)) << "\n";
  }
  out << areas.str();
  if (a.out.empty()) return;

  ensure_dir(a.out);
  const fs::path dir(a.out);
  auto f = open_out(dir / "areas.csv");
  f << areas.str();
  auto g = open_out(dir / "ste.csv");
  g << "kind,alpha,x,value,grad\n";
  for (const auto& k : kinds) {
    for (std::size_t i = 0; i < a.points; ++i) {
      const double x = -a.range + 2.0 * a.range * static_cast<double>(i) / static_cast<double>(a.points - 1);
      g << k.name() << "," << sig6(k.alpha) << "," << sig6(x) << "," << sig6(ste_value(k, x)) << ","
        << sig6(ste_grad(k, x)) << "\n";
    }
  }
  write_manifest(a.out, "ste-analyze",
                 {{"ste", join(a.kinds)}, {"alpha", exact(a.alpha)}, {"points", std::to_string(a.points)},
                  {"range", exact(a.range)}, {"out", a.out}});
}

// ---------------------------------------------------------------------------
// pack-bench

struct BenchArgs {
  std::size_t size = 64, channels = 28, repeats = 5;
  std::uint64_t seed = 0;
  std::string out;
};

void run_pack_bench(const BenchArgs& a, std::ostream& out) {
  if (a.size == 0 || a.channels == 0 || a.repeats == 0) throw ConfigError("pack-bench sizes must be positive");
  std::mt19937_64 rng(a.seed);
  auto pm1 = [&](const Shape& s) {
    DenseTensor t(s);
    for (auto& v : t.data()) v = (rng() >> 63) ? 1.0f : -1.0f;
    return t;
  };
  const DenseTensor x = pm1(Shape{1, a.channels, a.size, a.size});
  const DenseTensor w = pm1(Shape{a.channels, a.channels, 3, 3});
  const ConvGeometry geom{1, 1};
  const BitTensor xb = pack(x), wb = pack(w);
  const BitKernel kernel(wb);

  using Clock = std::chrono::steady_clock;
  struct Row {
    std::string name;
    double seconds;
    DenseTensor result;
  };
  auto time_it = [&](const std::string& name, auto&& fn) {
    DenseTensor r;
    const auto t0 = Clock::now();
    for (std::size_t i = 0; i < a.repeats; ++i) r = fn();
    const double s = std::chrono::duration<double>(Clock::now() - t0).count() / static_cast<double>(a.repeats);
    return Row{name, s, std::move(r)};
  };
  std::vector<Row> rows;
  rows.push_back(time_it("dense_serial", [&] { return conv2d_ref(x, w, {}, geom, -1.0f); }));
  rows.push_back(time_it("dense_parallel", [&] { return conv2d(x, w, {}, geom, -1.0f); }));
  rows.push_back(time_it("bit_serial", [&] { return bit_conv2d_serial(xb, wb, 1.0f, geom); }));
  rows.push_back(time_it("bit_parallel", [&] { return bit_conv2d(xb, kernel, 1.0f, geom); }));

  std::ostringstream csv;
  csv << "kernel,seconds,speedup,max_abs_diff,operand_bytes\n";
  const std::size_t dense_bytes = (x.size() + w.size()) * sizeof(float);
  const std::size_t bit_bytes = xb.packed_bytes() + wb.packed_bytes();
  for (const auto& r : rows) {
    double diff = 0;
    for (std::size_t i = 0; i < r.result.size(); ++i) {
      diff = std::max(diff, static_cast<double>(std::abs(r.result[i] - rows[0].result[i])));
    }
    const bool bits = r.name.rfind("bit", 0) == 0;
    csv << r.name << "," << sig6(r.seconds) << "," << sig6(rows[0].seconds / std::max(r.seconds, 1e-12)) << ","
        << sig6(diff) << "," << (bits ? bit_bytes : dense_bytes) << "\n";
  }
  out << csv.str();
  if (a.out.empty()) return;
  ensure_dir(a.out);
  auto f = open_out(fs::path(a.out) / "pack_bench.csv");
  f << csv.str();
  write_manifest(a.out, "pack-bench",
                 {{"size", std::to_string(a.size)}, {"channels", std::to_string(a.channels)},
                  {"repeats", std::to_string(a.repeats)}, {"seed", std::to_string(a.seed)}, {"out", a.out}});
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv, argv + argc);
  if (args.empty()) args.push_back("bisr");
  try {
    args = expand_config(std::move(args));
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }

  CLI::App app{"Binarized spectral-redistribution network toolkit", "bisr"};
  app.set_version_flag("--version", kToolkitVersion);
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "capture a scene through a simulated CASSI");
  s->add_option("--scene", sim.scene, "scene cube (.hst, 1 x N x H x W)");
  s->add_option("--mask", sim.mask, "coded aperture (.hst, 1 x 1 x H x W)");
  s->add_flag("--synth", sim.synth, "generate a synthetic scene and mask");
  s->add_option("--seed", sim.seed)->capture_default_str();
  s->add_option("--height", sim.height)->capture_default_str();
  s->add_option("--width", sim.width)->capture_default_str();
  s->add_option("--bands", sim.bands)->capture_default_str();
  s->add_option("--step", sim.step, "disperser shift per band")->capture_default_str();
  s->add_flag("--noise", sim.noise, "inject shot noise");
  s->add_option("--bit-depth", sim.bit_depth)->capture_default_str();
  s->add_option("--out", sim.out, "output directory")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train a network on synthetic or given scenes");
  tr.net.add(t);
  t->add_option("--steps", tr.tc.steps)->capture_default_str();
  t->add_option("--batch", tr.tc.batch)->capture_default_str();
  t->add_option("--lr-max", tr.tc.lr_max)->capture_default_str();
  t->add_option("--lr-min", tr.tc.lr_min)->capture_default_str();
  t->add_option("--patch", tr.tc.patch)->capture_default_str();
  t->add_option("--seed", tr.tc.seed)->capture_default_str();
  t->add_flag("--no-noise", tr.no_noise, "train on clean measurements");
  t->add_flag("--no-augment", tr.no_augment, "fixed top-left crop, no flips or rotations");
  t->add_option("--bit-depth", tr.tc.bit_depth)->capture_default_str();
  t->add_option("--step", tr.tc.step)->capture_default_str();
  t->add_option("--scenes", tr.scenes, "number of synthetic scenes")->capture_default_str();
  t->add_option("--scene-size", tr.scene_size)->capture_default_str();
  t->add_option("--scene-file", tr.scene_files, "scene cubes (.hst)")->delimiter(',');
  t->add_option("--mask", tr.mask, "coded aperture (.hst)");
  t->add_option("--out", tr.out, "output directory")->required();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "score predictions or a checkpoint");
  e->add_option("--pred", ev.pred, "predicted cubes (.hst)")->delimiter(',');
  e->add_option("--truth", ev.truth, "ground-truth cubes (.hst)")->delimiter(',');
  e->add_option("--checkpoint", ev.checkpoint, "checkpoint directory");
  e->add_option("--scene-file", ev.scene_files, "scene cubes (.hst)")->delimiter(',');
  e->add_option("--mask", ev.mask, "coded aperture (.hst)");
  e->add_option("--synth", ev.synth, "number of synthetic evaluation scenes")->capture_default_str();
  e->add_option("--scene-size", ev.scene_size)->capture_default_str();
  e->add_option("--step", ev.step)->capture_default_str();
  e->add_option("--seed", ev.seed)->capture_default_str();
  e->add_option("--out", ev.out, "output directory (stdout when omitted)");

  CountArgs ct;
  auto* c = app.add_subcommand("count", "Params/OPs accounting per part");
  ct.net.add(c);
  c->add_option("--height", ct.height)->capture_default_str();
  c->add_option("--width", ct.width)->capture_default_str();
  c->add_option("--out", ct.out, "output directory (stdout when omitted)");

  SteArgs st;
  auto* a = app.add_subcommand("ste-analyze", "surrogate curves and error areas");
  a->add_option("--ste", st.kinds, "surrogates to analyze")->delimiter(',')->capture_default_str();
  a->add_option("--alpha", st.alpha, "tanh sharpness")->capture_default_str();
  a->add_option("--points", st.points)->capture_default_str();
  a->add_option("--range", st.range, "sample x in [-range, range]")->capture_default_str();
  a->add_option("--out", st.out, "output directory (areas go to stdout either way)");

  BenchArgs bn;
  auto* b = app.add_subcommand("pack-bench", "bit-packed versus dense 3x3 convolution");
  b->add_option("--size", bn.size)->capture_default_str();
  b->add_option("--channels", bn.channels)->capture_default_str();
  b->add_option("--repeats", bn.repeats)->capture_default_str();
  b->add_option("--seed", bn.seed)->capture_default_str();
  b->add_option("--out", bn.out, "output directory (stdout when omitted)");

  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& pe) {
    if (pe.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      app.exit(pe, out, err);
      return kExitOk;
    }
    err << "usage error: " << pe.what() << "\n" << "run 'bisr --help' for usage\n";
    return kExitUsage;
  }

  try {
    if (s->parsed()) run_simulate(sim, out);
    if (t->parsed()) run_train(tr, out);
    if (e->parsed()) run_eval(ev, out);
    if (c->parsed()) run_count(ct, out);
    if (a->parsed()) run_ste(st, out);
    if (b->parsed()) run_pack_bench(bn, out);
  } catch (const ConfigError& ce) {
    err << ce.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace bisr

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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bisr/cli.hpp"
#include "bisr/tensor.hpp"
#include "doctest.h"

using namespace bisr;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "bisr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("bisr_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream s(text);
  for (std::string l; std::getline(s, l);) out.push_back(l);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream s(line);
  for (std::string f; std::getline(s, f, ',');) out.push_back(f);
  return out;
}

}  // namespace

TEST_CASE("help and usage errors") {
  const auto help = run({"--help"});
  CHECK(help.code == kExitOk);
  CHECK(help.out.find("simulate") != std::string::npos);
  CHECK(run({"count", "--bogus"}).code == kExitUsage);
  CHECK(run({"simulate"}).code == kExitUsage);  // --out is required
  CHECK(run({"count", "--channels", "6"}).code == kExitUsage);
  CHECK(run({"count", "--ste", "sigmoid"}).code == kExitUsage);
}

TEST_CASE("simulate writes deterministic products of the right shape") {
  const auto a = scratch("sim_a"), b = scratch("sim_b");
  const std::vector<std::string> common = {"simulate", "--synth", "--seed", "4", "--height", "16", "--width", "20",
                                           "--bands", "5", "--step", "3", "--noise"};
  auto args = common;
  args.insert(args.end(), {"--out", a.string()});
  REQUIRE(run(args).code == kExitOk);
  args = common;
  args.insert(args.end(), {"--out", b.string()});
  REQUIRE(run(args).code == kExitOk);
  for (const char* f : {"scene.hst", "mask.hst", "measurement.hst", "shifted.hst", "shifted_mask.hst"}) {
    CAPTURE(f);
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(read_hst((a / "measurement.hst").string()).shape() == Shape{1, 1, 16, 20 + 3 * 4});
  CHECK(read_hst((a / "shifted.hst").string()).shape() == Shape{1, 5, 16, 20});
  CHECK(slurp(a / "manifest.txt").rfind("# bisr run manifest\ncommand=simulate\n", 0) == 0);

  // a stored scene with a mask of the wrong size
  const auto c = scratch("sim_c");
  fs::create_directories(c);
  write_hst((c / "mask.hst").string(), DenseTensor(Shape{1, 1, 8, 8}, 1.0f));
  const auto bad = run({"simulate", "--scene", (a / "scene.hst").string(), "--mask", (c / "mask.hst").string(),
                        "--bands", "5", "--out", (c / "o").string()});
  CHECK(bad.code == kExitRuntime);
  CHECK(bad.err.find("dimension") != std::string::npos);
  const auto missing = run({"simulate", "--scene", (c / "nope.hst").string(), "--mask", (c / "mask.hst").string(),
                            "--out", (c / "o").string()});
  CHECK(missing.code == kExitRuntime);
  CHECK(missing.err.find("nope.hst") != std::string::npos);
  for (const auto& d : {a, b, c}) fs::remove_all(d);
}

TEST_CASE("count reports part rows that add up") {
  const auto r = run({"count", "--height", "64", "--width", "64"});
  REQUIRE(r.code == kExitOk);
  const auto ls = lines(r.out);
  REQUIRE(ls.size() == 7);
  CHECK(ls[0] == "part,binarized,params_f,params_b,ops_f,ops_b,params,ops");
  unsigned long long params = 0, ops = 0;
  for (std::size_t i = 1; i < 6; ++i) {
    const auto f = fields(ls[i]);
    params += std::stoull(f[6]);
    ops += std::stoull(f[7]);
  }
  const auto total = fields(ls[6]);
  CHECK(total[0] == "total");
  CHECK(std::stoull(total[6]) == params);
  CHECK(std::stoull(total[7]) == ops);
  CHECK(fields(ls[1])[1] == "0");
  CHECK(fields(ls[2])[1] == "1");

  const auto none = run({"count", "--height", "64", "--width", "64", "--binarize", "none"});
  CHECK(std::stoull(fields(lines(none.out)[6])[6]) > 10 * params);
}

TEST_CASE("ste-analyze reports closed-form areas") {
  const auto r = run({"ste-analyze", "--ste", "tanh", "--alpha", "2"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("tanh,2,0.693147") != std::string::npos);
  const auto all = run({"ste-analyze"});
  CHECK(all.out.find("clip,1,1,") != std::string::npos);
  CHECK(all.out.find("quad,1,0.666667,") != std::string::npos);
  const auto dir = scratch("ste");
  REQUIRE(run({"ste-analyze", "--points", "11", "--out", dir.string()}).code == kExitOk);
  CHECK(lines(slurp(dir / "ste.csv")).size() == 1 + 4 * 11);
  fs::remove_all(dir);
}

TEST_CASE("eval of a perfect prediction scores the cap") {
  const auto dir = scratch("eval");
  fs::create_directories(dir);
  DenseTensor cube(Shape{1, 3, 12, 12}, 0.25f);
  cube[5] = 0.75f;
  write_hst((dir / "a.hst").string(), cube);
  const auto r = run({"eval", "--pred", (dir / "a.hst").string(), "--truth", (dir / "a.hst").string()});
  REQUIRE(r.code == kExitOk);
  const auto ls = lines(r.out);
  REQUIRE(ls.size() == 3);
  CHECK(ls[0] == "scene,psnr_db,ssim");
  CHECK(fields(ls[1])[1] == "100");
  CHECK(fields(ls[1])[2] == "1");
  CHECK(fields(ls[2])[0] == "mean");
  CHECK(run({"eval", "--pred", (dir / "a.hst").string()}).code != kExitOk);
  fs::remove_all(dir);
}

TEST_CASE("a train manifest repeats the run bit for bit") {
  const auto a = scratch("train_a"), b = scratch("train_b");
  const auto first = run({"train", "--channels", "4", "--bands", "4", "--steps", "3", "--batch", "1", "--patch",
                          "16", "--scenes", "2", "--scene-size", "24", "--seed", "5", "--ste", "quad", "--out",
                          a.string()});
  REQUIRE(first.code == kExitOk);
  CHECK(lines(slurp(a / "history.csv")).size() == 4);
  const auto again = run({"--config", (a / "manifest.txt").string(), "--out", b.string()});
  REQUIRE(again.code == kExitOk);
  CHECK(slurp(a / "history.csv") == slurp(b / "history.csv"));
  for (const auto& e : fs::directory_iterator(a / "checkpoint")) {
    CHECK(slurp(e.path()) == slurp(b / "checkpoint" / e.path().filename()));
  }

  const auto ev = run({"eval", "--checkpoint", (a / "checkpoint").string(), "--synth", "1", "--scene-size", "24"});
  CHECK(ev.code == kExitOk);
  CHECK(lines(ev.out).size() == 3);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("config files") {
  const auto dir = scratch("cfg");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "c.txt");
    f << "# comment\ncommand=count\nheight = 32\nwidth=32\n";
  }
  const auto r = run({"--config", (dir / "c.txt").string()});
  REQUIRE(r.code == kExitOk);
  const auto direct = run({"count", "--height", "32", "--width", "32"});
  CHECK(r.out == direct.out);
  // command line wins over the file
  const auto over = run({"--config", (dir / "c.txt").string(), "--width", "64"});
  CHECK(over.out == run({"count", "--height", "32", "--width", "64"}).out);
  {
    std::ofstream f(dir / "bad.txt");
    f << "command=count\nnot a pair\n";
  }
  CHECK(run({"--config", (dir / "bad.txt").string()}).code == kExitUsage);
  CHECK(run({"--config", (dir / "none.txt").string()}).code == kExitUsage);
  fs::remove_all(dir);
}

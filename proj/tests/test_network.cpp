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

#include <cmath>
#include <filesystem>

#include "bisr/checkpoint.hpp"
#include "bisr/network.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace bisr;
using bisr::testing::dot;
using bisr::testing::numeric_grad;
using bisr::testing::random_tensor;
using bisr::testing::rel_error;

namespace {

NetworkConfig tiny(std::size_t c = 4, std::size_t n = 2) {
  NetworkConfig cfg;
  cfg.channels = c;
  cfg.n_wavelengths = n;
  return cfg;
}

bool within(double value, double target, double band) { return std::abs(value - target) <= band * target; }

}  // namespace

TEST_CASE("network maps (n, 2N, H, W) to (n, N, H, W)") {
  std::mt19937_64 rng(1);
  Network<float> net(tiny(4, 3), 5);
  const auto x = random_tensor<float>(Shape{2, 6, 8, 12}, rng);
  CHECK(net.forward(x).shape() == Shape{2, 3, 8, 12});
  const auto [h, m] = split_channels(x, 3);
  CHECK(net.forward(h, m).vec() == net.forward(x).vec());
  CHECK_THROWS_AS(net.forward(DenseTensor(Shape{1, 5, 8, 8})), DimensionError);
  CHECK_THROWS_AS(net.forward(DenseTensor(Shape{1, 6, 6, 8})), DimensionError);
  CHECK_THROWS_AS(net.forward(DenseTensor(Shape{1, 6, 8, 10})), DimensionError);
  CHECK_THROWS_AS(net.forward(DenseTensor(Shape{1, 3, 8, 8}), DenseTensor(Shape{1, 3, 8, 4})), DimensionError);
}

TEST_CASE("configuration validation") {
  CHECK_NOTHROW(tiny().validate());
  CHECK_THROWS_AS(tiny(6).validate(), ConfigError);
  CHECK_THROWS_AS(tiny(4, 0).validate(), ConfigError);
  auto cfg = tiny();
  CHECK_THROWS_AS(cfg.set_binarized(Part::kEmbedding, true), ConfigError);
  cfg.set_binarized(Part::kBottleneck, false);
  CHECK_FALSE(cfg.binarized(Part::kBottleneck));
  CHECK(cfg.binarized(Part::kEncoder));
  CHECK(parse_module_style(module_style_name(ModuleStyle::kNormal)) == ModuleStyle::kNormal);
  CHECK_THROWS_AS(parse_module_style("fancy"), ConfigError);
  CHECK_THROWS_AS(Network<float>(tiny(5), 0), ConfigError);
}

TEST_CASE("construction is deterministic per seed") {
  Network<float> a(tiny(), 9), b(tiny(), 9), c(tiny(), 10);
  auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  REQUIRE(pa.size() == pb.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].name == pb[i].name);
    CHECK(pa[i].value->vec() == pb[i].value->vec());
    any_diff = any_diff || pa[i].value->vec() != pc[i].value->vec();
  }
  CHECK(any_diff);
}

TEST_CASE("parameter names carry their part") {
  Network<float> net(tiny(), 0);
  std::size_t embedding = 0, mapping = 0, alphas = 0;
  for (const auto& p : net.parameters()) {
    embedding += p.name.rfind("embedding.", 0) == 0;
    mapping += p.name.rfind("mapping.", 0) == 0;
    alphas += p.role == ParamRole::kSteAlpha;
  }
  CHECK(embedding == 3);  // 1x1 weight and bias, 3x3 weight
  CHECK(mapping == 3);
  // two BiSR-Convs per block and per reshaping module, 5 + 6 of them
  CHECK(alphas == 22);
}

TEST_CASE("batch samples are independent") {
  std::mt19937_64 rng(2);
  Network<float> net(tiny(), 3);
  const auto x = random_tensor<float>(Shape{2, 4, 8, 8}, rng);
  const auto y = net.forward(x);
  for (std::size_t b = 0; b < 2; ++b) {
    DenseTensor one(Shape{1, 4, 8, 8});
    std::copy_n(x.plane(b, 0), one.size(), one.vec().begin());
    const auto yo = net.forward(one);
    CHECK(std::equal(yo.vec().begin(), yo.vec().end(), y.plane(b, 0)));
  }
}

TEST_CASE("full tiny network gradient check") {
  struct Variant {
    const char* name;
    NetworkConfig cfg;
  };
  std::vector<Variant> variants;
  variants.push_back({"bisrnet", tiny()});
  auto quad = tiny();
  quad.ste = SteKind::quad();
  quad.redistribution = false;
  variants.push_back({"quad no-sr", quad});
  auto normal = tiny();
  normal.module_style = ModuleStyle::kNormal;
  variants.push_back({"normal modules", normal});
  variants.push_back({"base", [] {
                        auto c = tiny();
                        c.binarize_encoder = c.binarize_bottleneck = c.binarize_decoder = false;
                        return c;
                      }()});
  for (auto& v : variants) {
    const std::string variant = v.name;
    CAPTURE(variant);
    std::mt19937_64 rng(4);
    // RPReLU and leaky rectifiers are piecewise linear; central differences
    // are only meaningful when no kink lies within h, which holds for this seed.
    Network<double> net(v.cfg, 12);
    net.set_mode(BinaryMode::kSurrogate);
    CheckTensor x = random_tensor<double>(Shape{1, 4, 8, 8}, rng);
    const auto r = random_tensor<double>(Shape{1, 2, 8, 8}, rng);
    net.zero_grad();
    net.forward(x);
    const auto gx = net.backward(r);
    auto loss = [&] { return dot(net.forward(x), r); };
    CHECK(rel_error(gx.vec(), numeric_grad(x.data(), loss)) < 1e-3);
    // Whole parameter vector, plus every tensor whose typical gradient entry
    // stands clear of the difference quotient's roundoff (about 1e-9 here).
    std::vector<double> all_a, all_n;
    double worst = 0;
    std::string worst_name;
    for (auto& p : net.parameters()) {
      const auto num = numeric_grad(p.value->data(), loss);
      all_a.insert(all_a.end(), p.grad->vec().begin(), p.grad->vec().end());
      all_n.insert(all_n.end(), num.begin(), num.end());
      double norm = 0;
      for (double g : num) norm += g * g;
      if (std::sqrt(norm / static_cast<double>(num.size())) < 1e-7) continue;
      const double e = rel_error(p.grad->vec(), num);
      if (e > worst) {
        worst = e;
        worst_name = p.name;
      }
    }
    CHECK(rel_error(all_a, all_n) < 1e-3);
    CAPTURE(worst_name);
    CHECK(worst < 1e-3);
  }
}

TEST_CASE("backward bookkeeping") {
  std::mt19937_64 rng(5);
  Network<float> net(tiny(), 1);
  const auto x = random_tensor<float>(Shape{1, 4, 8, 8}, rng);
  CHECK_THROWS_AS(net.backward(DenseTensor(Shape{1, 2, 8, 8})), StateError);
  net.forward(x);
  CHECK_THROWS_AS(net.backward(DenseTensor(Shape{1, 2, 8, 4})), DimensionError);

  net.zero_grad();
  net.forward(x);
  net.backward(DenseTensor(Shape{1, 2, 8, 8}));
  for (auto& p : net.parameters()) {
    for (float g : p.grad->data()) CHECK(g == 0.0f);
  }
  CHECK_THROWS_AS(net.backward(DenseTensor(Shape{1, 2, 8, 8})), StateError);

  const auto r = random_tensor<float>(Shape{1, 2, 8, 8}, rng);
  auto grads = [&] {
    net.zero_grad();
    net.forward(x);
    net.backward(r);
    std::vector<std::vector<float>> out;
    for (auto& p : net.parameters()) out.push_back(p.grad->vec());
    return out;
  };
  CHECK(grads() == grads());
}

TEST_CASE("alpha clamp") {
  Network<float> net(tiny(), 0);
  for (auto& p : net.parameters()) {
    if (p.role == ParamRole::kSteAlpha) p.value->fill(-3.0f);
  }
  net.clamp_constrained();
  for (auto& p : net.parameters()) {
    if (p.role == ParamRole::kSteAlpha) CHECK((*p.value)[0] == static_cast<float>(kMinAlpha));
  }
}

TEST_CASE("one-bit division rule maps full-precision part costs to their 1-bit costs") {
  // Full-precision column -> binarized column, OPs in millions, params exact.
  CHECK(binarized_ops(3390) == 53);
  CHECK(binarized_ops(1096) == 17);
  CHECK(binarized_ops(5005) == 78);
  CHECK(binarized_params(177878) == 5559);
  CHECK(binarized_params(278889) == 8715);
  CHECK(binarized_params(186562) == 5830);
  CHECK(binarized_ops(32) == 1);
  CHECK(binarized_ops(31) == 0);
}

TEST_CASE("accounting totals are part sums") {
  for (const auto& cfg : {NetworkConfig::bisrnet(), NetworkConfig::base(), tiny(8, 5)}) {
    const auto acc = Network<float>(cfg, 0).count(64, 96);
    std::uint64_t params = 0, ops = 0;
    for (Part p : kAllParts) {
      const auto& pc = acc.part(p);
      CHECK(pc.part == p);
      CHECK(pc.binarized == cfg.binarized(p));
      CHECK(pc.params_b == binarized_params(pc.params_f));
      CHECK(pc.ops_b == binarized_ops(pc.ops_f));
      params += pc.params();
      ops += pc.ops();
    }
    CHECK(acc.total_params == params);
    CHECK(acc.total_ops == ops);
  }
}

TEST_CASE("accounting scales with area and drops when a part is binarized") {
  Network<float> net(NetworkConfig::bisrnet(), 0);
  const auto small = net.count(64, 64), big = net.count(128, 128);
  CHECK(small.total_params == big.total_params);
  for (Part p : kAllParts) CHECK(big.part(p).ops_f == 4 * small.part(p).ops_f);

  const auto base = Network<float>(NetworkConfig::base(), 0).count(64, 64);
  for (Part p : {Part::kEncoder, Part::kBottleneck, Part::kDecoder}) {
    auto cfg = NetworkConfig::base();
    cfg.set_binarized(p, true);
    const auto one = Network<float>(cfg, 0).count(64, 64);
    CHECK(one.total_params < base.total_params);
    CHECK(one.total_ops < base.total_ops);
    CHECK(one.part(Part::kEmbedding).params_f == base.part(Part::kEmbedding).params_f);
  }
}

TEST_CASE("accounting at 256x256 sits within 15% of the target totals") {
  const auto bi = Network<float>(NetworkConfig::bisrnet(), 0).count(256, 256);
  CHECK(within(static_cast<double>(bi.total_params), 36e3, 0.15));
  CHECK(within(static_cast<double>(bi.total_ops), 1.18e9, 0.15));
  const auto base = Network<float>(NetworkConfig::base(), 0).count(256, 256);
  CHECK(within(static_cast<double>(base.total_params), 634e3, 0.15));
  CHECK(within(static_cast<double>(base.total_ops), 10.52e9, 0.15));
}

TEST_CASE("count matches the collected parameter sizes in full precision") {
  Network<float> net(NetworkConfig::base(), 0);
  std::uint64_t n = 0;
  for (auto& p : net.parameters()) n += p.value->size();
  CHECK(net.count(32, 32).total_params == n);
}

TEST_CASE("checkpoint round trip is bit exact") {
  const auto dir = std::filesystem::temp_directory_path() / "bisr_test_ckpt";
  std::filesystem::remove_all(dir);
  auto cfg = tiny(8, 3);
  cfg.ste = SteKind::scaled_tanh(0.7);
  cfg.binarize_decoder = false;
  cfg.module_style = ModuleStyle::kNormal;
  Network<float> net(cfg, 21);
  save_checkpoint(dir.string(), net);
  auto loaded = load_checkpoint(dir.string());
  const auto& lc = loaded->config();
  CHECK(lc.channels == 8);
  CHECK(lc.n_wavelengths == 3);
  CHECK(lc.ste.alpha == 0.7);
  CHECK_FALSE(lc.binarize_decoder);
  CHECK(lc.module_style == ModuleStyle::kNormal);
  std::mt19937_64 rng(3);
  const auto x = random_tensor<float>(Shape{1, 6, 8, 8}, rng);
  CHECK(loaded->forward(x).vec() == net.forward(x).vec());
  CHECK_THROWS_AS(load_checkpoint((dir / "missing").string()), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("binarize list parsing") {
  auto cfg = tiny();
  apply_binarize_list(cfg, "none");
  CHECK(binarize_list(cfg) == "none");
  apply_binarize_list(cfg, "decoder,encoder");
  CHECK(binarize_list(cfg) == "encoder,decoder");
  apply_binarize_list(cfg, "all");
  CHECK(binarize_list(cfg) == "encoder,bottleneck,decoder");
  CHECK_THROWS_AS(apply_binarize_list(cfg, "mapping"), ConfigError);
}

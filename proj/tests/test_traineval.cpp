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
#include <numbers>

#include "bisr/traineval.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace bisr;
using bisr::testing::numeric_grad;
using bisr::testing::random_tensor;
using bisr::testing::rel_error;

namespace {

// Two-pass weighted moments with a directly normalized 2-D Gaussian.
double ssim_oracle(const DenseTensor& a, const DenseTensor& b) {
  const int K = 11, half = 5;
  std::vector<double> w2(K * K);
  double norm = 0;
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) norm += w2[i * K + j] = std::exp(-((i - half) * (i - half) + (j - half) * (j - half)) / 4.5);
  for (auto& v : w2) v /= norm;
  const double c1 = 1e-4, c2 = 9e-4;
  double total = 0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < a.n() * a.c(); ++p) {
    const float* pa = a.data().data() + p * a.shape().plane();
    const float* pb = b.data().data() + p * a.shape().plane();
    for (std::size_t y = 0; y + K <= a.h(); ++y)
      for (std::size_t x = 0; x + K <= a.w(); ++x) {
        auto at = [&](const float* q, int i, int j) { return double(q[(y + i) * a.w() + x + j]); };
        double ma = 0, mb = 0;
        for (int i = 0; i < K; ++i)
          for (int j = 0; j < K; ++j) {
            ma += w2[i * K + j] * at(pa, i, j);
            mb += w2[i * K + j] * at(pb, i, j);
          }
        double va = 0, vb = 0, cab = 0;
        for (int i = 0; i < K; ++i)
          for (int j = 0; j < K; ++j) {
            const double da = at(pa, i, j) - ma, db = at(pb, i, j) - mb;
            va += w2[i * K + j] * da * da;
            vb += w2[i * K + j] * db * db;
            cab += w2[i * K + j] * da * db;
          }
        total += (2 * ma * mb + c1) * (2 * cab + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
  }
  return total / count;
}

TrainConfig tiny_train() {
  TrainConfig tc;
  tc.steps = 6;
  tc.batch = 2;
  tc.patch = 16;
  tc.seed = 3;
  return tc;
}

NetworkConfig tiny_net() {
  NetworkConfig cfg;
  cfg.channels = 4;
  cfg.n_wavelengths = 4;
  return cfg;
}

}  // namespace

TEST_CASE("rmse by hand") {
  DenseTensor p(Shape{1, 1, 1, 4}, std::vector<float>{1, 2, 3, 4});
  DenseTensor t(Shape{1, 1, 1, 4}, std::vector<float>{1, 2, 3, 0});
  const auto r = rmse_loss(p, t);
  CHECK(r.loss == doctest::Approx(2.0));
  CHECK(r.grad.vec() == std::vector<float>{0, 0, 0, 0.5f});
  const auto z = rmse_loss(t, t);
  CHECK(z.loss == 0.0f);
  for (float g : z.grad.data()) CHECK(g == 0.0f);
  CHECK_THROWS_AS(rmse_loss(p, DenseTensor(Shape{1, 1, 2, 2})), DimensionError);
  CHECK_THROWS_AS(rmse_loss(DenseTensor(), DenseTensor()), DimensionError);
}

TEST_CASE("rmse gradient check") {
  std::mt19937_64 rng(1);
  CheckTensor p = random_tensor<double>(Shape{2, 3, 4, 4}, rng);
  const auto t = random_tensor<double>(p.shape(), rng);
  const auto g = rmse_loss(p, t).grad;
  CHECK(rel_error(g.vec(), numeric_grad(p.data(), [&] { return rmse_loss(p, t).loss; })) < 1e-6);
}

TEST_CASE("first Adam step moves each parameter by the learning rate") {
  CheckTensor w(Shape{1, 1, 1, 3}, std::vector<double>{1, 2, 3});
  CheckTensor g(Shape{1, 1, 1, 3}, std::vector<double>{0.5, -2, 1e-3});
  CheckTensor a(Shape{1, 1, 1, 1}, 0.01), ga(Shape{1, 1, 1, 1}, 1.0);
  std::vector<ParamRef<double>> ps{{"w", ParamRole::kWeight, &w, &g}, {"alpha", ParamRole::kSteAlpha, &a, &ga}};
  AdamState<double> st;
  adam_step(ps, st, 0.1);
  CHECK(st.step == 1);
  CHECK(w[0] == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(w[1] == doctest::Approx(2.1).epsilon(1e-6));
  CHECK(w[2] == doctest::Approx(2.9).epsilon(1e-4));
  CHECK(a[0] == kMinAlpha);

  // second step: m and v follow the textbook recursions
  const double w1 = w[0];
  adam_step(ps, st, 0.1);
  const double m = 0.9 * 0.1 * 0.5 + 0.1 * 0.5, v = 0.999 * 0.001 * 0.25 + 0.001 * 0.25;
  const double step2 = 0.1 * (m / (1 - 0.81)) / (std::sqrt(v / (1 - 0.999 * 0.999)) + 1e-8);
  CHECK(w[0] == doctest::Approx(w1 - step2).epsilon(1e-12));
}

TEST_CASE("cosine schedule") {
  CHECK(cosine_lr(0, 100, 4e-4, 1e-6) == doctest::Approx(4e-4));
  CHECK(cosine_lr(100, 100, 4e-4, 1e-6) == doctest::Approx(1e-6));
  CHECK(cosine_lr(50, 100, 4e-4, 1e-6) == doctest::Approx(0.5 * (4e-4 + 1e-6)));
  for (std::size_t t = 1; t <= 100; ++t) CHECK(cosine_lr(t, 100, 1, 0) <= cosine_lr(t - 1, 100, 1, 0));
  CHECK(cosine_lr(0, 0, 3e-4, 0) == 3e-4);
  CHECK_THROWS_AS(cosine_lr(101, 100, 1, 0), ArgumentError);
}

TEST_CASE("psnr closed forms") {
  DenseTensor a(Shape{1, 2, 4, 4}, 0.5f), b(Shape{1, 2, 4, 4}, 0.6f);
  // MSE 0.01 -> 20 dB
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-5));
  CHECK(psnr(a, a) == kPsnrCap);
  CHECK(psnr(a, b, 2.0) == doctest::Approx(20.0 + 20.0 * std::log10(2.0)).epsilon(1e-5));
  // planes are scored one by one
  DenseTensor c = a;
  std::fill(c.plane(0, 1), c.plane(0, 1) + 16, 0.6f);
  CHECK(psnr(a, c) == doctest::Approx(0.5 * (kPsnrCap + 20.0)).epsilon(1e-5));
  CHECK_THROWS_AS(psnr(a, DenseTensor(Shape{1, 1, 4, 4})), DimensionError);
}

TEST_CASE("ssim identities and oracle") {
  std::mt19937_64 rng(2);
  const auto a = random_tensor<float>(Shape{2, 2, 16, 19}, rng, 0, 1);
  auto b = a;
  for (auto& v : b.vec()) v = std::clamp(v + 0.1f * static_cast<float>(rng() % 1000) / 1000.0f - 0.05f, 0.0f, 1.0f);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ssim(a, b) < 1.0);
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
  CHECK(std::abs(ssim(a, b) - ssim_oracle(a, b)) < 1e-6);
  const DenseTensor flat(a.shape(), 0.3f);
  CHECK(std::abs(ssim(a, flat) - ssim_oracle(a, flat)) < 1e-6);
  CHECK_THROWS_AS(ssim(DenseTensor(Shape{1, 1, 10, 20}), DenseTensor(Shape{1, 1, 10, 20})), DimensionError);
}

TEST_CASE("batches are deterministic and consistent with the forward model") {
  const auto scenes = std::vector<DenseTensor>{synth_scene(1, 24, 24, 4), synth_scene(2, 24, 24, 4)};
  const auto mask = random_mask(3, 24, 24);
  auto tc = tiny_train();
  const auto a = make_batch(scenes, mask, tc, 4);
  CHECK(a.input.shape() == Shape{2, 8, 16, 16});
  CHECK(a.target.shape() == Shape{2, 4, 16, 16});
  CHECK(make_batch(scenes, mask, tc, 4).input.vec() == a.input.vec());
  CHECK(make_batch(scenes, mask, tc, 5).input.vec() != a.input.vec());

  tc.noise = false;
  tc.augment = false;
  const auto clean = make_batch(scenes, mask, tc, 0);
  for (std::size_t b = 0; b < tc.batch; ++b) {
    DenseTensor target(Shape{1, 4, 16, 16}), input(Shape{1, 8, 16, 16});
    std::copy_n(clean.target.plane(b, 0), target.size(), target.vec().begin());
    std::copy_n(clean.input.plane(b, 0), input.size(), input.vec().begin());
    bool matched = false;
    for (const auto& scene : scenes) {
      const auto patch = crop_transform(scene, mask, 16, 0, 0, 0);
      if (patch.scene.vec() != target.vec()) continue;
      CassiSystem sys{patch.mask, tc.step, 4};
      CHECK(network_input(forward_capture(patch.scene, sys), sys).vec() == input.vec());
      matched = true;
    }
    CHECK(matched);
  }
}

TEST_CASE("training runs, records history and is reproducible") {
  const auto scenes = std::vector<DenseTensor>{synth_scene(1, 24, 24, 4)};
  const auto mask = random_mask(3, 24, 24);
  const auto tc = tiny_train();
  Network<float> a(tiny_net(), 7), b(tiny_net(), 7);
  const auto ha = train(a, tc, scenes, mask);
  const auto hb = train(b, tc, scenes, mask);
  REQUIRE(ha.size() == tc.steps);
  for (std::size_t i = 0; i < ha.size(); ++i) {
    CHECK(ha[i].step == i);
    CHECK(ha[i].loss == hb[i].loss);
    CHECK(ha[i].lr == doctest::Approx(cosine_lr(i, tc.steps, tc.lr_max, tc.lr_min)));
    CHECK(std::isfinite(ha[i].loss));
  }
  auto pa = a.parameters(), pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].value->vec() == pb[i].value->vec());
  auto bad = tc;
  bad.patch = 18;
  CHECK_THROWS_AS(train(a, bad, scenes, mask), ConfigError);
}

TEST_CASE("training reduces the loss on a single patch") {
  const auto scenes = std::vector<DenseTensor>{synth_scene(5, 16, 16, 4)};
  const auto mask = random_mask(6, 16, 16);
  TrainConfig tc;
  tc.steps = 60;
  tc.batch = 1;
  tc.patch = 16;
  tc.lr_max = 1e-3;
  tc.noise = false;
  tc.augment = false;
  Network<float> net(tiny_net(), 2);
  const auto h = train(net, tc, scenes, mask);
  CHECK(h.back().loss < 0.75 * h.front().loss);
}

TEST_CASE("scoring and evaluation") {
  std::mt19937_64 rng(4);
  const auto t = random_tensor<float>(Shape{1, 3, 12, 12}, rng, 0, 1);
  const auto p = t + DenseTensor(t.shape(), 0.1f);
  const auto table = score({"a", "b"}, {t, p}, {t, t});
  REQUIRE(table.rows.size() == 2);
  CHECK(table.rows[0].psnr_db == kPsnrCap);
  CHECK(table.rows[0].ssim == doctest::Approx(1.0));
  CHECK(table.rows[1].psnr_db == doctest::Approx(20.0).epsilon(1e-4));
  CHECK(table.mean.scene == "mean");
  CHECK(table.mean.psnr_db == doctest::Approx(0.5 * (kPsnrCap + table.rows[1].psnr_db)));
  CHECK_THROWS_AS(score({"a"}, {t, p}, {t, t}), ArgumentError);

  const auto scenes = std::vector<DenseTensor>{synth_scene(1, 16, 16, 4)};
  Network<float> net(tiny_net(), 1);
  const auto ev = evaluate(net, {"s"}, scenes, random_mask(2, 16, 16));
  REQUIRE(ev.rows.size() == 1);
  CHECK(std::isfinite(ev.rows[0].psnr_db));
  CHECK(ev.rows[0].ssim <= 1.0);
}

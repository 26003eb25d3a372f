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

#include "bisr/modules.hpp"
#include "doctest.h"
#include "module_check.hpp"

using namespace bisr;
using bisr::testing::check_module;
using bisr::testing::random_tensor;

namespace {

constexpr double kLayerTol = 1e-4;

BinarySettings tanh_settings(bool sr = true) { return {SteKind::scaled_tanh(1.0), sr, BinaryMode::kHard}; }

template <typename T>
void zero_weights(Module<T>& m) {
  std::vector<ParamRef<T>> ps;
  m.collect("", ps);
  for (auto& p : ps) {
    if (p.role == ParamRole::kWeight) p.value->fill(T(0));
  }
}

template <typename T>
std::vector<std::string> names(Module<T>& m) {
  std::vector<ParamRef<T>> ps;
  m.collect("m.", ps);
  std::vector<std::string> out;
  for (auto& p : ps) out.push_back(p.name);
  return out;
}

}  // namespace

TEST_CASE("parameter roles parse back") {
  for (ParamRole r : {ParamRole::kWeight, ParamRole::kBias, ParamRole::kRedistScale, ParamRole::kRedistShift,
                      ParamRole::kSteAlpha, ParamRole::kRPReLUSlope, ParamRole::kRPReLUShiftIn,
                      ParamRole::kRPReLUShiftOut}) {
    CHECK(parse_role(role_name(r)) == r);
  }
  CHECK_THROWS_AS(parse_role("gain"), ArgumentError);
}

TEST_CASE("single 3x3 conv accounting by hand") {
  std::mt19937_64 rng(1);
  Conv2dLayer<float> conv(1, 1, 3, {1, 1}, true, rng);
  Cost cost;
  const Shape out = conv.account(Shape{1, 1, 4, 4}, cost);
  CHECK(out == Shape{1, 1, 4, 4});
  CHECK(cost.params == 10);
  CHECK(cost.macs == 144);
  Cost strided;
  Conv2dLayer<float> down(2, 4, 4, {2, 1}, true, rng);
  CHECK(down.account(Shape{1, 2, 8, 8}, strided) == Shape{1, 4, 4, 4});
  CHECK(strided.params == 4 * 2 * 16 + 4);
  CHECK(strided.macs == 4 * 2 * 16 * 16);
  CHECK_THROWS_AS(down.account(Shape{1, 3, 8, 8}, strided), DimensionError);
}

TEST_CASE("conv layer forward is conv plus bias, gradients check") {
  std::mt19937_64 rng(2);
  Conv2dLayer<double> conv(3, 2, 3, {1, 1}, true, rng);
  conv.bias() = random_tensor<double>(conv.bias().shape(), rng);
  const auto x = random_tensor<double>(Shape{2, 3, 5, 4}, rng);
  const auto expect = conv2d_ref(x, conv.weight(), std::span<const double>(conv.bias().data()), {1, 1}, 0.0);
  CHECK(conv.forward(x).vec() == expect.vec());
  const auto rep = check_module(conv, x, rng);
  CHECK(rep.params == 2);
  CHECK(rep.worst() < kLayerTol);
  CHECK_THROWS_AS(Conv2dLayer<double>(3, 2, 3, {1, 1}, true, rng).backward(expect), StateError);
}

TEST_CASE("full-precision block gradients and size") {
  std::mt19937_64 rng(3);
  ConvBlock<double> block(4, rng);
  const auto rep = check_module(block, random_tensor<double>(Shape{1, 4, 6, 6}, rng), rng);
  CHECK(rep.params == 8);
  CHECK(rep.worst() < kLayerTol);
  Cost cost;
  CHECK(block.account(Shape{1, 4, 6, 6}, cost) == Shape{1, 4, 6, 6});
  const std::size_t C = 4, E = kBlockExpansion * C;
  CHECK(cost.params == 2 * (9 * C * C + C) + (C * E + E) + (E * C + C));
  CHECK(cost.macs == (2 * 9 * C * C + 2 * C * E) * 36);
}

TEST_CASE("leaky rectifier") {
  CheckTensor x(Shape{1, 1, 1, 3}, std::vector<double>{-2, 0, 3});
  CHECK(leaky_relu(x, 0.2).vec() == std::vector<double>{-0.4, 0, 3});
}

TEST_CASE("BiSR-Conv layer exposes parameters by configuration") {
  std::mt19937_64 rng(4);
  BiSRConvLayer<float> full(4, tanh_settings(), rng);
  CHECK(names(full) == std::vector<std::string>{"m.k", "m.b", "m.alpha", "m.weight", "m.beta", "m.gamma", "m.zeta"});
  BiSRConvLayer<float> plain(4, {SteKind::clip(), false, BinaryMode::kHard}, rng);
  CHECK(names(plain) == std::vector<std::string>{"m.weight", "m.beta", "m.gamma", "m.zeta"});

  Cost a, b;
  full.account(Shape{1, 4, 8, 8}, a);
  plain.account(Shape{1, 4, 8, 8}, b);
  CHECK(a.params == 9 * 16 + 3 * 4 + 2 * 4 + 1);
  CHECK(b.params == 9 * 16 + 3 * 4);
  CHECK(a.macs == 9 * 16 * 64);
  CHECK(a.macs == b.macs);
}

TEST_CASE("binarized block gradients") {
  std::mt19937_64 rng(5);
  BinarizedBlock<double> block(3, tanh_settings(), rng);
  const auto rep = check_module(block, random_tensor<double>(Shape{1, 3, 5, 5}, rng), rng);
  CHECK(rep.params == 14);
  CHECK(rep.worst() < kLayerTol);
}

TEST_CASE("binarized reshaping modules: shapes and gradients") {
  std::mt19937_64 rng(6);
  struct Case {
    ReshapeKind kind;
    std::size_t in_c;
    Shape out;
  };
  const Case cases[] = {
      {ReshapeKind::kDownsample, 2, {1, 4, 2, 3}},
      {ReshapeKind::kFusionUp, 2, {1, 4, 4, 6}},
      {ReshapeKind::kFusionDown, 4, {1, 2, 4, 6}},
      {ReshapeKind::kUpsample, 4, {1, 2, 8, 12}},
  };
  for (const auto& c : cases) {
    CAPTURE(reshape_name(c.kind));
    for (bool sr : {true, false}) {
      BinarizedReshape<double> m(c.kind, c.in_c, tanh_settings(sr), rng);
      const auto x = random_tensor<double>(Shape{1, c.in_c, 4, 6}, rng);
      CHECK(m.forward(x).shape() == c.out);
      Cost cost;
      CHECK(m.account(x.shape(), cost) == c.out);
      const auto rep = check_module(m, x, rng);
      CHECK(rep.input < kLayerTol);
      CHECK(rep.worst_param < kLayerTol);
    }
  }
}

TEST_CASE("binarized reshaping modules with zero weights reduce to their skeletons") {
  std::mt19937_64 rng(7);
  const auto x = random_tensor<float>(Shape{2, 4, 4, 6}, rng, -2, 2);
  for (BinaryMode mode : {BinaryMode::kHard, BinaryMode::kSurrogate}) {
    auto build = [&](ReshapeKind k) {
      auto m = std::make_unique<BinarizedReshape<float>>(k, 4, tanh_settings(), rng);
      zero_weights(*m);
      m->set_mode(mode);
      return m;
    };
    auto down = build(ReshapeKind::kDownsample);
    const auto pooled = avg_pool2x2(x);
    CHECK(down->forward(x).vec() == concat_channels(pooled, pooled).vec());

    auto up = build(ReshapeKind::kFusionUp);
    CHECK(up->forward(x).vec() == concat_channels(x, x).vec());

    auto fd = build(ReshapeKind::kFusionDown);
    auto [a, b] = split_channels(x, 2);
    CHECK(fd->forward(x).vec() == ((a + b) * 0.5f).vec());

    auto us = build(ReshapeKind::kUpsample);
    auto [ua, ub] = split_channels(bilinear_up2(x), 2);
    CHECK(us->forward(x).vec() == ((ua + ub) * 0.5f).vec());
  }
}

TEST_CASE("binarized reshaping modules validate channels") {
  std::mt19937_64 rng(8);
  CHECK_THROWS_AS(BinarizedReshape<float>(ReshapeKind::kFusionDown, 3, tanh_settings(), rng), DimensionError);
  CHECK_THROWS_AS(BinarizedReshape<float>(ReshapeKind::kUpsample, 5, tanh_settings(), rng), DimensionError);
  BinarizedReshape<float> down(ReshapeKind::kDownsample, 2, tanh_settings(), rng);
  CHECK_THROWS_AS(down.forward(DenseTensor(Shape{1, 3, 4, 4})), DimensionError);
  CHECK_THROWS_AS(down.forward(DenseTensor(Shape{1, 2, 5, 4})), DimensionError);
}

TEST_CASE("normal modules: shapes, gradients and blocked identity path") {
  std::mt19937_64 rng(9);
  const Shape in{1, 4, 4, 6};
  const Shape outs[] = {{1, 8, 2, 3}, {1, 8, 4, 6}, {1, 2, 4, 6}, {1, 2, 8, 12}};
  const ReshapeKind kinds[] = {ReshapeKind::kDownsample, ReshapeKind::kFusionUp, ReshapeKind::kFusionDown,
                               ReshapeKind::kUpsample};
  for (int i = 0; i < 4; ++i) {
    CAPTURE(reshape_name(kinds[i]));
    auto m = make_normal_module<double>(kinds[i], 4, tanh_settings(), rng);
    const auto x = random_tensor<double>(in, rng);
    CHECK(m->forward(x).shape() == outs[i]);
    const auto rep = check_module(*m, x, rng);
    CHECK(rep.params == 2);
    CHECK(rep.worst() < kLayerTol);

    zero_weights(*m);
    for (BinaryMode mode : {BinaryMode::kHard, BinaryMode::kSurrogate}) {
      m->set_mode(mode);
      {
        const auto t = m->forward(x);
        for (double v : t.data()) CHECK(v == 0.0);
      }
    }
  }
  auto clip = make_normal_module<float>(ReshapeKind::kFusionUp, 4, {SteKind::clip(), true, BinaryMode::kHard}, rng);
  CHECK(names(*clip) == std::vector<std::string>{"m.weight"});
}

TEST_CASE("full-precision reshaping modules") {
  std::mt19937_64 rng(10);
  const ReshapeKind kinds[] = {ReshapeKind::kDownsample, ReshapeKind::kFusionUp, ReshapeKind::kFusionDown,
                               ReshapeKind::kUpsample};
  const Shape outs[] = {{1, 8, 2, 3}, {1, 8, 4, 6}, {1, 2, 4, 6}, {1, 2, 8, 12}};
  for (int i = 0; i < 4; ++i) {
    auto m = make_full_precision_module<double>(kinds[i], 4, rng);
    const auto x = random_tensor<double>(Shape{1, 4, 4, 6}, rng);
    CHECK(m->forward(x).shape() == outs[i]);
    Cost cost;
    CHECK(m->account(x.shape(), cost) == outs[i]);
    CHECK(check_module(*m, x, rng).worst() < kLayerTol);
  }
}

TEST_CASE("sequential composes and prefixes names") {
  std::mt19937_64 rng(11);
  Sequential<double> seq;
  seq.add("a", std::make_unique<Conv2dLayer<double>>(2, 3, 1, ConvGeometry{1, 0}, true, rng));
  seq.add("b", std::make_unique<BiSRConvLayer<double>>(3, tanh_settings(), rng));
  CHECK(seq.size() == 2);
  const auto n = names(seq);
  CHECK(n.front() == "m.a.weight");
  CHECK(n.back() == "m.b.zeta");
  CHECK(check_module(seq, random_tensor<double>(Shape{1, 2, 4, 4}, rng), rng).worst() < kLayerTol);
}

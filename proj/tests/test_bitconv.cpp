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

#include "bisr/bitconv.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace bisr;
using bisr::testing::random_pm1;

TEST_CASE("pack and unpack round trip with word-aligned rows") {
  std::mt19937_64 rng(1);
  for (std::size_t w : {1, 5, 63, 64, 65, 130}) {
    const auto x = random_pm1<float>(Shape{2, 3, 4, w}, rng);
    const BitTensor b = pack(x);
    CHECK(b.words_per_row() == (w + 63) / 64);
    CHECK(unpack<float>(b).vec() == x.vec());
    CHECK(b.bit(1, 2, 3, w - 1) == (x.at(1, 2, 3, w - 1) > 0));
  }
}

TEST_CASE("pack rejects values other than plus or minus one") {
  DenseTensor x(Shape{1, 1, 1, 3}, std::vector<float>{1, -1, 0});
  CHECK_THROWS_AS(pack(x), DomainError);
  DenseTensor y(Shape{1, 1, 1, 2}, std::vector<float>{1, 0.5f});
  CHECK_THROWS_AS(pack(y), DomainError);
}

TEST_CASE("packed storage is about 32 times smaller") {
  BitTensor b(Shape{1, 28, 256, 256});
  CHECK(b.dense_bytes() == 32 * b.packed_bytes());
}

TEST_CASE("xnor popcount dot equals the real dot product") {
  std::mt19937_64 rng(2);
  for (std::size_t n : {1, 7, 64, 65, 100, 128, 200}) {
    const auto a = random_pm1<double>(Shape{1, 1, 1, n}, rng);
    const auto b = random_pm1<double>(Shape{1, 1, 1, n}, rng);
    const BitTensor pa = pack(a), pb = pack(b);
    CHECK(xnor_popcount_dot(pa.words(), pb.words(), n) == static_cast<std::int64_t>(bisr::testing::dot(a, b)));
  }
  // garbage past the valid bits must not leak into the result
  BitTensor x(Shape{1, 1, 1, 3}), y(Shape{1, 1, 1, 3});
  x.words()[0] = ~BitTensor::Word(0);
  y.words()[0] = 0b111;
  CHECK(xnor_popcount_dot(x.words(), y.words(), 3) == 3);
  CHECK_THROWS_AS(xnor_popcount_dot(x.words(), y.words(), 65), ArgumentError);
}

TEST_CASE("bit convolution matches the dense reference with -1 padding") {
  std::mt19937_64 rng(3);
  struct Case {
    Shape in;
    std::size_t c_out, k;
    ConvGeometry g;
  };
  const Case cases[] = {
      {{1, 1, 4, 4}, 1, 3, {1, 1}},   {{2, 3, 9, 7}, 4, 3, {1, 1}},  {{1, 8, 16, 16}, 16, 4, {2, 1}},
      {{1, 30, 5, 70}, 2, 3, {1, 1}}, {{1, 2, 8, 8}, 3, 1, {1, 0}},  {{1, 3, 6, 6}, 2, 3, {1, 2}},
      {{1, 5, 10, 11}, 3, 4, {2, 1}}, {{1, 1, 3, 3}, 1, 3, {1, 0}},
  };
  for (const auto& c : cases) {
    const auto x = random_pm1<float>(c.in, rng);
    const auto w = random_pm1<float>(Shape{c.c_out, c.in.c, c.k, c.k}, rng);
    const float scale = 0.375f;
    auto ref = conv2d_ref(x, w, {}, c.g, -1.0f);
    ref *= scale;
    const BitTensor xb = pack(x), wb = pack(w);
    const auto fast = bit_conv2d(xb, wb, scale, c.g);
    const auto slow = bit_conv2d_serial(xb, wb, scale, c.g);
    REQUIRE(fast.shape() == ref.shape());
    CHECK(fast.vec() == ref.vec());
    CHECK(slow.vec() == ref.vec());
  }
}

TEST_CASE("bit convolution rejects incompatible operands") {
  const BitTensor x(Shape{1, 3, 4, 4}), w(Shape{2, 2, 3, 3}), r(Shape{2, 3, 3, 2});
  CHECK_THROWS_AS(bit_conv2d<float>(x, w, 1.0f, {1, 1}), DimensionError);
  CHECK_THROWS_AS(bit_conv2d_serial<float>(x, w, 1.0f, {1, 1}), DimensionError);
  CHECK_THROWS_AS(BitKernel{r}, DimensionError);
}

TEST_CASE("bit kernel streams follow channel, row, column order") {
  std::mt19937_64 rng(4);
  const auto w = random_pm1<float>(Shape{3, 5, 3, 3}, rng);
  const BitKernel k(pack(w));
  CHECK(k.taps() == 45);
  CHECK(k.words_per_patch() == 1);
  for (std::size_t co = 0; co < 3; ++co) {
    const auto s = k.stream(co);
    for (std::size_t t = 0; t < 45; ++t) {
      const std::size_t ci = t / 9, ky = (t % 9) / 3, kx = t % 3;
      CHECK(((s[0] >> t) & 1u) == (w.at(co, ci, ky, kx) > 0 ? 1u : 0u));
    }
  }
}

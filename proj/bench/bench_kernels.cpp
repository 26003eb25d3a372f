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

// Serial reference kernels against their parallel counterparts.

#include <benchmark/benchmark.h>

#include <random>

#include "bisr/bitconv.hpp"

namespace {

using namespace bisr;

DenseTensor random_pm1(const Shape& s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  DenseTensor t(s);
  for (auto& v : t.vec()) v = (rng() >> 63) ? 1.0f : -1.0f;
  return t;
}

struct Operands {
  DenseTensor x, w;
  BitTensor xb, wb;
  BitKernel kernel;

  explicit Operands(std::size_t size, std::size_t channels)
      : x(random_pm1(Shape{1, channels, size, size}, 1)),
        w(random_pm1(Shape{channels, channels, 3, 3}, 2)),
        xb(pack(x)),
        wb(pack(w)),
        kernel(wb) {}
};

constexpr ConvGeometry kSame{1, 1};

void BM_DenseSerial(benchmark::State& st) {
  const Operands op(st.range(0), st.range(1));
  for (auto _ : st) benchmark::DoNotOptimize(conv2d_ref(op.x, op.w, {}, kSame, -1.0f));
}

void BM_DenseParallel(benchmark::State& st) {
  const Operands op(st.range(0), st.range(1));
  for (auto _ : st) benchmark::DoNotOptimize(conv2d(op.x, op.w, {}, kSame, -1.0f));
}

void BM_BitSerial(benchmark::State& st) {
  const Operands op(st.range(0), st.range(1));
  for (auto _ : st) benchmark::DoNotOptimize(bit_conv2d_serial(op.xb, op.wb, 1.0f, kSame));
}

void BM_BitParallel(benchmark::State& st) {
  const Operands op(st.range(0), st.range(1));
  for (auto _ : st) benchmark::DoNotOptimize(bit_conv2d(op.xb, op.kernel, 1.0f, kSame));
}

#define BISR_SIZES ->Args({64, 28})->Args({128, 28})->Args({64, 112})->Unit(benchmark::kMillisecond)
BENCHMARK(BM_DenseSerial) BISR_SIZES;
BENCHMARK(BM_DenseParallel) BISR_SIZES;
BENCHMARK(BM_BitSerial) BISR_SIZES;
BENCHMARK(BM_BitParallel) BISR_SIZES;

}  // namespace

BENCHMARK_MAIN();

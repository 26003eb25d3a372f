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

// Helpers shared by the unit tests and the acceptance report.

#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "bisr/tensor.hpp"

namespace bisr::testing {

template <typename T>
Tensor<T> random_tensor(const Shape& s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor<T> t(s);
  for (auto& v : t.data()) v = static_cast<T>(d(rng));
  return t;
}

template <typename T>
Tensor<T> random_pm1(const Shape& s, std::mt19937_64& rng) {
  Tensor<T> t(s);
  for (auto& v : t.data()) v = (rng() >> 63) ? T(1) : T(-1);
  return t;
}

template <typename T>
double dot(const Tensor<T>& a, const Tensor<T>& b) {
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

/// ||a - b|| / max(||a||, ||b||), zero when both vanish.
inline double rel_error(std::span<const double> a, std::span<const double> b) {
  double num = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double den = std::sqrt(std::max(na, nb));
  return den == 0 ? 0.0 : std::sqrt(num) / den;
}

/// Central differences of `loss` with respect to every entry of `values`,
/// which are perturbed in place and restored.
inline std::vector<double> numeric_grad(std::span<double> values, const std::function<double()>& loss,
                                        double h = 1e-6) {
  std::vector<double> g(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double keep = values[i];
    values[i] = keep + h;
    const double up = loss();
    values[i] = keep - h;
    const double down = loss();
    values[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

}  // namespace bisr::testing

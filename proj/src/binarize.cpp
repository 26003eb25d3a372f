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

#include "bisr/binarize.hpp"

#include <functional>
#include <numbers>

namespace bisr {

std::string SteKind::name() const {
  switch (family) {
    case SteFamily::kClip: return "clip";
    case SteFamily::kQuad: return "quad";
    case SteFamily::kQuadVerbatim: return "quad-verbatim";
    case SteFamily::kScaledTanh: return "tanh";
  }
  return "?";
}

SteKind SteKind::parse(const std::string& name, double alpha) {
  if (name == "clip") return clip();
  if (name == "quad") return quad();
  if (name == "quad-verbatim") return quad_verbatim();
  if (name == "tanh") return scaled_tanh(alpha);
  throw ArgumentError("unknown STE kind '" + name + "' (expected clip, quad, quad-verbatim or tanh)");
}

template <typename T>
BinarizedWeights<T> binarize_weights(std::span<const T> w) {
  if (w.empty()) throw ArgumentError("cannot binarize an empty weight array");
  BinarizedWeights<T> out;
  out.sign.resize(w.size());
  T total = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    total += std::abs(w[i]);
    out.sign[i] = sign(w[i]);
  }
  out.scale = total / static_cast<T>(w.size());
  return out;
}

template BinarizedWeights<float> binarize_weights(std::span<const float>);
template BinarizedWeights<double> binarize_weights(std::span<const double>);

double approx_error_area(const SteKind& kind) {
  switch (kind.family) {
    case SteFamily::kClip:
      return 1.0;
    case SteFamily::kQuad:
      return 2.0 / 3.0;
    case SteFamily::kQuadVerbatim: {
      // On (0, 1) the integrand is |1 - 2x - x^2|, which changes sign at
      // sqrt(2) - 1; the negative half mirrors it.
      const double r = std::numbers::sqrt2 - 1.0;
      const auto antiderivative = [](double x) { return x - x * x - x * x * x / 3.0; };
      return 2.0 * (2.0 * antiderivative(r) - antiderivative(1.0));
    }
    case SteFamily::kScaledTanh:
      return 2.0 * std::numbers::ln2 / kind.alpha;
  }
  return 0.0;
}

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, std::size_t n) {
  if (n % 2 == 1) ++n;
  const double h = (b - a) / static_cast<double>(n);
  // one-sided limits at the ends; the verbatim quadratic jumps at |x| = 1
  double acc = f(std::nextafter(a, b)) + f(std::nextafter(b, a));
  for (std::size_t i = 1; i < n; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * f(a + h * static_cast<double>(i));
  return acc * h / 3.0;
}

}  // namespace

double approx_error_area_numeric(const SteKind& kind, std::size_t intervals_per_segment) {
  // Segment interiors see the one-sided limit of Sign, so x = 0 is evaluated
  // with the sign of the segment it belongs to.
  const auto left = [&](double x) { return std::abs(-1.0 - ste_value(kind, x)); };
  const auto right = [&](double x) { return std::abs(1.0 - ste_value(kind, x)); };
  std::vector<double> neg_breaks;
  std::vector<double> pos_breaks;
  if (kind.is_tanh()) {
    const double span = 50.0 / kind.alpha;
    neg_breaks = {-span, 0.0};
    pos_breaks = {0.0, span};
  } else {
    neg_breaks = {-4.0, -1.0, 0.0};
    pos_breaks = {0.0, 1.0, 4.0};
    if (kind.family == SteFamily::kQuadVerbatim) {
      const double r = std::numbers::sqrt2 - 1.0;
      neg_breaks = {-4.0, -1.0, -r, 0.0};
      pos_breaks = {0.0, r, 1.0, 4.0};
    }
  }
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < neg_breaks.size(); ++i) {
    area += simpson(left, neg_breaks[i], neg_breaks[i + 1], intervals_per_segment);
  }
  for (std::size_t i = 0; i + 1 < pos_breaks.size(); ++i) {
    area += simpson(right, pos_breaks[i], pos_breaks[i + 1], intervals_per_segment);
  }
  return area;
}

}  // namespace bisr

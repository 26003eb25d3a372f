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

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "bisr/errors.hpp"

namespace bisr {

enum class SteFamily {
  kClip,
  // Bounded piecewise quadratic: 2x + x^2 on [-1, 0), 2x - x^2 on [0, 1).
  kQuad,
  // The quadratic with its two middle branches swapped (2x + x^2 on (0, 1),
  // 2x - x^2 on (-1, 0]). Reaches 1.25 at x = 0.5 and exceeds 1 inside the
  // interval; kept for comparison only.
  kQuadVerbatim,
  kScaledTanh,
};

/// Surrogate used in place of Sign when propagating gradients.
struct SteKind {
  SteFamily family = SteFamily::kScaledTanh;
  double alpha = 1.0;  // only meaningful for kScaledTanh, always > 0

  static SteKind clip() { return {SteFamily::kClip, 1.0}; }
  static SteKind quad() { return {SteFamily::kQuad, 1.0}; }
  static SteKind quad_verbatim() { return {SteFamily::kQuadVerbatim, 1.0}; }
  static SteKind scaled_tanh(double alpha) {
    if (!(alpha > 0)) throw ArgumentError("tanh sharpness must be positive, got " + std::to_string(alpha));
    return {SteFamily::kScaledTanh, alpha};
  }

  bool is_tanh() const { return family == SteFamily::kScaledTanh; }

  /// "clip", "quad", "quad-verbatim" or "tanh".
  std::string name() const;
  /// Inverse of name(); tanh kinds take `alpha`.
  static SteKind parse(const std::string& name, double alpha = 1.0);

  bool operator==(const SteKind&) const = default;
};

/// +1 for x > 0, -1 otherwise (Sign(0) = -1). NaN is rejected.
template <typename T>
T sign(T x) {
  if (std::isnan(x)) throw ArgumentError("sign of NaN");
  return x > T(0) ? T(1) : T(-1);
}

/// Branch-free sign for hot loops whose inputs are known finite.
template <typename T>
inline T sign_unchecked(T x) {
  return x > T(0) ? T(1) : T(-1);
}

template <typename T>
inline T ste_value(const SteKind& kind, T x) {
  switch (kind.family) {
    case SteFamily::kClip:
      if (x >= T(1)) return T(1);
      if (x <= T(-1)) return T(-1);
      return x;
    case SteFamily::kQuad:
      if (x >= T(1)) return T(1);
      if (x <= T(-1)) return T(-1);
      return x < T(0) ? T(2) * x + x * x : T(2) * x - x * x;
    case SteFamily::kQuadVerbatim:
      if (x >= T(1)) return T(1);
      if (x <= T(-1)) return T(-1);
      return x > T(0) ? T(2) * x + x * x : T(2) * x - x * x;
    case SteFamily::kScaledTanh:
      return std::tanh(static_cast<T>(kind.alpha) * x);
  }
  return x;
}

/// Derivative of ste_value. Clip/Quad return the outer (zero) branch at |x| = 1.
template <typename T>
inline T ste_grad(const SteKind& kind, T x) {
  const T ax = std::abs(x);
  switch (kind.family) {
    case SteFamily::kClip:
      return ax < T(1) ? T(1) : T(0);
    case SteFamily::kQuad:
      return ax < T(1) ? T(2) - T(2) * ax : T(0);
    case SteFamily::kQuadVerbatim:
      return ax < T(1) ? T(2) + T(2) * ax : T(0);
    case SteFamily::kScaledTanh: {
      const T a = static_cast<T>(kind.alpha);
      const T t = std::tanh(a * x);
      return a * (T(1) - t * t);
    }
  }
  return T(0);
}

/// d tanh(alpha x) / d alpha; zero for the non-tanh kinds.
template <typename T>
inline T ste_alpha_grad(const SteKind& kind, T x) {
  if (!kind.is_tanh()) return T(0);
  const T t = std::tanh(static_cast<T>(kind.alpha) * x);
  return x * (T(1) - t * t);
}

template <typename T>
struct BinarizedWeights {
  T scale = 0;          // mean |w|
  std::vector<T> sign;  // +1 / -1 per element
};

/// Mean-|w| scaled sign binarization; the effective weight is scale * sign.
template <typename T>
BinarizedWeights<T> binarize_weights(std::span<const T> w);

/// Area between Sign and the surrogate over the whole real line.
double approx_error_area(const SteKind& kind);

/// Same area by composite Simpson quadrature of |Sign - surrogate|, split at
/// the surrogate's breakpoints. Tanh kinds integrate over [-50/alpha, 50/alpha],
/// the others over [-4, 4] (the integrand vanishes outside [-1, 1]).
double approx_error_area_numeric(const SteKind& kind, std::size_t intervals_per_segment = 20000);

}  // namespace bisr

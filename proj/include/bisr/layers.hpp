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

#include <random>

#include "bisr/binarize.hpp"
#include "bisr/bitconv.hpp"
#include "bisr/tensor.hpp"

namespace bisr {

/// kHard runs Sign and the XNOR/popcount kernel in the forward pass and uses
/// the surrogate only for gradients (straight-through). kSurrogate replaces
/// Sign by the surrogate in the forward pass too, which makes the layer a
/// smooth function that finite differences can check.
enum class BinaryMode { kHard, kSurrogate };

// ---------------------------------------------------------------------------
// RPReLU, per channel i:
//   y > gamma_i : y - gamma_i + zeta_i
//   otherwise   : beta_i * (y - gamma_i) + zeta_i
// beta, gamma and zeta are (1, C, 1, 1) tensors.

template <typename T>
Tensor<T> rprelu(const Tensor<T>& y, const Tensor<T>& beta, const Tensor<T>& gamma, const Tensor<T>& zeta);

template <typename T>
struct RPReLUGrads {
  Tensor<T> input;
  Tensor<T> beta;
  Tensor<T> gamma;
  Tensor<T> zeta;
};

template <typename T>
RPReLUGrads<T> rprelu_backward(const Tensor<T>& grad_out, const Tensor<T>& y, const Tensor<T>& beta,
                               const Tensor<T>& gamma);

// ---------------------------------------------------------------------------
// 1-bit convolution core shared by BiSR-Conv and the plain binarized
// convolutions. Activations pass through Sign (gradient from the configured
// surrogate); weights become mean|w| * Sign(w) with the Clip surrogate.

template <typename T>
struct BinaryConvCache {
  BinaryMode mode = BinaryMode::kHard;
  SteKind kind;            // alpha holds the layer's sharpness for tanh
  ConvGeometry geom;
  Shape input_shape;
  Tensor<T> pre;           // activations entering Sign
  Tensor<T> binarized;     // Sign(pre) or surrogate(pre)
  Tensor<T> weight;        // full-precision weights
  Tensor<T> weight_bin;    // Sign(w) or Clip(w)
  T scale = 0;             // mean |w|
};

template <typename T>
struct BinaryConvGrads {
  Tensor<T> pre;      // d/d(pre)
  Tensor<T> weight;   // d/d(full-precision weights)
  T alpha = 0;        // d/d(alpha); zero unless the surrogate is tanh
};

template <typename T>
Tensor<T> binary_conv_forward(const Tensor<T>& pre, const Tensor<T>& weight, const SteKind& kind, BinaryMode mode,
                              ConvGeometry geom, BinaryConvCache<T>& cache);

template <typename T>
BinaryConvGrads<T> binary_conv_backward(const Tensor<T>& grad_out, const BinaryConvCache<T>& cache);

// ---------------------------------------------------------------------------
// BiSR-Conv: X_r = k * X_f + b, X_b = Sign(X_r), Y_b = bitconv(X_b, W_b),
// X_o = X_f + RPReLU(Y_b). Channel preserving, 3x3, stride 1, pad 1 (-1).

template <typename T>
struct BiSRConvParams {
  Tensor<T> k;       // (1, C, 1, 1) redistribution scale
  Tensor<T> b;       // (1, C, 1, 1) redistribution shift
  Tensor<T> alpha;   // (1, 1, 1, 1) tanh sharpness, kept >= kMinAlpha
  Tensor<T> weight;  // (C, C, 3, 3)
  Tensor<T> beta;    // (1, C, 1, 1)
  Tensor<T> gamma;   // (1, C, 1, 1)
  Tensor<T> zeta;    // (1, C, 1, 1)
  bool redistribute = true;

  std::size_t channels() const { return weight.n(); }

  /// Fan-in uniform weights, k = 1, b = 0, alpha = 1, beta = 0.25, gamma = zeta = 0.
  static BiSRConvParams init(std::size_t channels, std::mt19937_64& rng, bool redistribute = true);
  void validate() const;
};

inline constexpr double kMinAlpha = 1e-3;

template <typename T>
struct BiSRConvCache {
  bool valid = false;
  bool redistribute = true;
  Tensor<T> input;   // X_f
  Tensor<T> k;
  Tensor<T> y;       // Y_b
  Tensor<T> beta;
  Tensor<T> gamma;
  BinaryConvCache<T> conv;
};

/// Mirrors every field of BiSRConvParams plus the input gradient.
template <typename T>
struct LayerGrads {
  Tensor<T> k;
  Tensor<T> b;
  Tensor<T> alpha;
  Tensor<T> weight;
  Tensor<T> beta;
  Tensor<T> gamma;
  Tensor<T> zeta;
  Tensor<T> input;

  static LayerGrads zeros_like(const BiSRConvParams<T>& p);
  void accumulate(const LayerGrads& other);
};

/// `kind` selects the surrogate; for tanh its alpha is replaced by p.alpha.
template <typename T>
Tensor<T> bisr_conv_forward(const Tensor<T>& x, const BiSRConvParams<T>& p, const SteKind& kind, BinaryMode mode,
                            BiSRConvCache<T>& cache);

template <typename T>
LayerGrads<T> bisr_conv_backward(const Tensor<T>& grad_out, const BiSRConvCache<T>& cache, const SteKind& kind);

/// Fan-in uniform initialization in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
template <typename T>
Tensor<T> uniform_fan_in(const Shape& shape, std::mt19937_64& rng);

}  // namespace bisr

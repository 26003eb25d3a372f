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

#include "bisr/layers.hpp"

#include <cmath>

namespace bisr {

namespace {

template <typename T>
void check_channel_vector(const Tensor<T>& v, std::size_t channels, const char* name) {
  if (v.shape() != Shape{1, channels, 1, 1}) {
    throw DimensionError(std::string(name) + " has shape " + v.shape().str() + ", expected (1, " +
                         std::to_string(channels) + ", 1, 1)");
  }
}

}  // namespace

template <typename T>
Tensor<T> rprelu(const Tensor<T>& y, const Tensor<T>& beta, const Tensor<T>& gamma, const Tensor<T>& zeta) {
  check_channel_vector(beta, y.c(), "beta");
  check_channel_vector(gamma, y.c(), "gamma");
  check_channel_vector(zeta, y.c(), "zeta");
  Tensor<T> out(y.shape());
  const std::size_t hw = y.shape().plane();
  for (std::size_t n = 0; n < y.n(); ++n) {
    for (std::size_t c = 0; c < y.c(); ++c) {
      const T bt = beta[c], gm = gamma[c], zt = zeta[c];
      const T* src = y.plane(n, c);
      T* dst = out.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) {
        const T d = src[i] - gm;
        dst[i] = (src[i] > gm ? d : bt * d) + zt;
      }
    }
  }
  return out;
}

template <typename T>
RPReLUGrads<T> rprelu_backward(const Tensor<T>& grad_out, const Tensor<T>& y, const Tensor<T>& beta,
                               const Tensor<T>& gamma) {
  if (grad_out.shape() != y.shape()) {
    throw DimensionError("rprelu gradient " + grad_out.shape().str() + " vs activation " + y.shape().str());
  }
  const std::size_t C = y.c();
  RPReLUGrads<T> g{Tensor<T>(y.shape()), Tensor<T>(Shape{1, C, 1, 1}), Tensor<T>(Shape{1, C, 1, 1}),
                   Tensor<T>(Shape{1, C, 1, 1})};
  const std::size_t hw = y.shape().plane();
  for (std::size_t n = 0; n < y.n(); ++n) {
    for (std::size_t c = 0; c < C; ++c) {
      const T bt = beta[c], gm = gamma[c];
      const T* src = y.plane(n, c);
      const T* go = grad_out.plane(n, c);
      T* gi = g.input.plane(n, c);
      T d_beta = 0, d_gamma = 0, d_zeta = 0;
      for (std::size_t i = 0; i < hw; ++i) {
        if (src[i] > gm) {
          gi[i] = go[i];
          d_gamma -= go[i];
        } else {
          gi[i] = bt * go[i];
          d_beta += go[i] * (src[i] - gm);
          d_gamma -= bt * go[i];
        }
        d_zeta += go[i];
      }
      g.beta[c] += d_beta;
      g.gamma[c] += d_gamma;
      g.zeta[c] += d_zeta;
    }
  }
  return g;
}

template <typename T>
Tensor<T> binary_conv_forward(const Tensor<T>& pre, const Tensor<T>& weight, const SteKind& kind, BinaryMode mode,
                              ConvGeometry geom, BinaryConvCache<T>& cache) {
  if (weight.c() != pre.c()) {
    throw DimensionError("binary conv input has " + std::to_string(pre.c()) + " channels, kernel expects " +
                         std::to_string(weight.c()));
  }
  cache.mode = mode;
  cache.kind = kind;
  cache.geom = geom;
  cache.input_shape = pre.shape();
  cache.pre = pre;
  cache.weight = weight;

  const auto bw = binarize_weights<T>(weight.data());
  cache.scale = bw.scale;
  cache.weight_bin = Tensor<T>(weight.shape());
  cache.binarized = Tensor<T>(pre.shape());
  if (mode == BinaryMode::kHard) {
    std::copy(bw.sign.begin(), bw.sign.end(), cache.weight_bin.data().begin());
    for (std::size_t i = 0; i < pre.size(); ++i) cache.binarized[i] = sign(pre[i]);
    return bit_conv2d(pack(cache.binarized), pack(cache.weight_bin), cache.scale, geom);
  }
  const SteKind clip = SteKind::clip();
  for (std::size_t i = 0; i < weight.size(); ++i) cache.weight_bin[i] = ste_value(clip, weight[i]);
  for (std::size_t i = 0; i < pre.size(); ++i) cache.binarized[i] = ste_value(kind, pre[i]);
  return conv2d(cache.binarized, cache.weight_bin * cache.scale, std::span<const T>{}, geom, T(-1));
}

template <typename T>
BinaryConvGrads<T> binary_conv_backward(const Tensor<T>& grad_out, const BinaryConvCache<T>& cache) {
  const std::size_t k = cache.weight.h();
  BinaryConvGrads<T> g;
  // Gradient with respect to the effective weights scale * w_bin.
  const Tensor<T> g_eff = conv2d_backward_weight(grad_out, cache.binarized, k, cache.geom, T(-1));
  const Tensor<T> g_bin = conv2d_backward_input(grad_out, cache.weight_bin * cache.scale, cache.input_shape,
                                                cache.geom);

  // Product rule through scale = mean|w|: the direct term goes through the
  // Clip surrogate, the scale term through d|w|/dw = Sign(w).
  const SteKind clip = SteKind::clip();
  T shared = 0;
  for (std::size_t i = 0; i < g_eff.size(); ++i) shared += g_eff[i] * cache.weight_bin[i];
  shared /= static_cast<T>(cache.weight.size());
  g.weight = Tensor<T>(cache.weight.shape());
  for (std::size_t i = 0; i < g_eff.size(); ++i) {
    const T w = cache.weight[i];
    g.weight[i] = cache.scale * ste_grad(clip, w) * g_eff[i] + sign_unchecked(w) * shared;
  }

  g.pre = Tensor<T>(cache.input_shape);
  T d_alpha = 0;
  for (std::size_t i = 0; i < g_bin.size(); ++i) {
    const T x = cache.pre[i];
    g.pre[i] = g_bin[i] * ste_grad(cache.kind, x);
    d_alpha += g_bin[i] * ste_alpha_grad(cache.kind, x);
  }
  g.alpha = d_alpha;
  return g;
}

template <typename T>
Tensor<T> uniform_fan_in(const Shape& shape, std::mt19937_64& rng) {
  const double fan_in = static_cast<double>(shape.c * shape.h * shape.w);
  const double bound = 1.0 / std::sqrt(fan_in);
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<T> out(shape);
  for (auto& v : out.data()) v = static_cast<T>(dist(rng));
  return out;
}

template <typename T>
BiSRConvParams<T> BiSRConvParams<T>::init(std::size_t channels, std::mt19937_64& rng, bool redistribute) {
  const Shape vec{1, channels, 1, 1};
  BiSRConvParams p;
  p.k = Tensor<T>(vec, T(1));
  p.b = Tensor<T>(vec, T(0));
  p.alpha = Tensor<T>(Shape{1, 1, 1, 1}, T(1));
  p.weight = uniform_fan_in<T>(Shape{channels, channels, 3, 3}, rng);
  p.beta = Tensor<T>(vec, T(0.25));
  p.gamma = Tensor<T>(vec, T(0));
  p.zeta = Tensor<T>(vec, T(0));
  p.redistribute = redistribute;
  return p;
}

template <typename T>
void BiSRConvParams<T>::validate() const {
  const std::size_t C = weight.n();
  if (weight.shape() != Shape{C, C, 3, 3}) {
    throw DimensionError("BiSR-Conv weight must be (C, C, 3, 3), got " + weight.shape().str());
  }
  check_channel_vector(k, C, "k");
  check_channel_vector(b, C, "b");
  check_channel_vector(beta, C, "beta");
  check_channel_vector(gamma, C, "gamma");
  check_channel_vector(zeta, C, "zeta");
  if (alpha.shape() != Shape{1, 1, 1, 1}) throw DimensionError("alpha must be a scalar tensor");
  if (!(alpha[0] >= T(kMinAlpha))) throw ArgumentError("alpha below its floor: " + std::to_string(alpha[0]));
}

template <typename T>
LayerGrads<T> LayerGrads<T>::zeros_like(const BiSRConvParams<T>& p) {
  return LayerGrads{Tensor<T>(p.k.shape()),    Tensor<T>(p.b.shape()),     Tensor<T>(p.alpha.shape()),
                    Tensor<T>(p.weight.shape()), Tensor<T>(p.beta.shape()), Tensor<T>(p.gamma.shape()),
                    Tensor<T>(p.zeta.shape()),  Tensor<T>()};
}

template <typename T>
void LayerGrads<T>::accumulate(const LayerGrads& other) {
  k += other.k;
  b += other.b;
  alpha += other.alpha;
  weight += other.weight;
  beta += other.beta;
  gamma += other.gamma;
  zeta += other.zeta;
}

template <typename T>
Tensor<T> bisr_conv_forward(const Tensor<T>& x, const BiSRConvParams<T>& p, const SteKind& kind, BinaryMode mode,
                            BiSRConvCache<T>& cache) {
  p.validate();
  const std::size_t C = p.channels();
  if (x.c() != C) {
    throw DimensionError("BiSR-Conv over " + std::to_string(C) + " channels got input " + x.shape().str());
  }
  Tensor<T> redistributed = x;
  if (p.redistribute) {
    const std::size_t hw = x.shape().plane();
    for (std::size_t n = 0; n < x.n(); ++n) {
      for (std::size_t c = 0; c < C; ++c) {
        T* v = redistributed.plane(n, c);
        const T kc = p.k[c], bc = p.b[c];
        for (std::size_t i = 0; i < hw; ++i) v[i] = kc * v[i] + bc;
      }
    }
  }
  const SteKind used = kind.is_tanh() ? SteKind::scaled_tanh(static_cast<double>(p.alpha[0])) : kind;
  cache.y = binary_conv_forward(redistributed, p.weight, used, mode, ConvGeometry{1, 1}, cache.conv);
  cache.input = x;
  cache.k = p.k;
  cache.beta = p.beta;
  cache.gamma = p.gamma;
  cache.redistribute = p.redistribute;
  cache.valid = true;
  Tensor<T> out = rprelu(cache.y, p.beta, p.gamma, p.zeta);
  out += x;
  return out;
}

template <typename T>
LayerGrads<T> bisr_conv_backward(const Tensor<T>& grad_out, const BiSRConvCache<T>& cache, const SteKind& kind) {
  if (!cache.valid) throw StateError("BiSR-Conv backward without a matching forward");
  if (grad_out.shape() != cache.input.shape()) {
    throw DimensionError("BiSR-Conv gradient " + grad_out.shape().str() + " vs cached input " +
                         cache.input.shape().str());
  }
  if (kind.family != cache.conv.kind.family) throw StateError("surrogate differs from the one used in forward");
  const std::size_t C = cache.input.c();
  const Shape vec{1, C, 1, 1};
  LayerGrads<T> g;
  auto act = rprelu_backward(grad_out, cache.y, cache.beta, cache.gamma);
  g.beta = std::move(act.beta);
  g.gamma = std::move(act.gamma);
  g.zeta = std::move(act.zeta);

  auto conv = binary_conv_backward(act.input, cache.conv);
  g.weight = std::move(conv.weight);
  g.alpha = Tensor<T>(Shape{1, 1, 1, 1}, conv.alpha);

  g.k = Tensor<T>(vec);
  g.b = Tensor<T>(vec);
  g.input = grad_out;
  const std::size_t hw = cache.input.shape().plane();
  for (std::size_t n = 0; n < cache.input.n(); ++n) {
    for (std::size_t c = 0; c < C; ++c) {
      const T* gr = conv.pre.plane(n, c);
      const T* xf = cache.input.plane(n, c);
      T* gi = g.input.plane(n, c);
      if (cache.redistribute) {
        const T kc = cache.k[c];
        T dk = 0, db = 0;
        for (std::size_t i = 0; i < hw; ++i) {
          dk += gr[i] * xf[i];
          db += gr[i];
          gi[i] += kc * gr[i];
        }
        g.k[c] += dk;
        g.b[c] += db;
      } else {
        for (std::size_t i = 0; i < hw; ++i) gi[i] += gr[i];
      }
    }
  }
  return g;
}

#define BISR_INSTANTIATE_LAYERS(T)                                                                         \
  template Tensor<T> rprelu(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);       \
  template RPReLUGrads<T> rprelu_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,            \
                                          const Tensor<T>&);                                               \
  template Tensor<T> binary_conv_forward(const Tensor<T>&, const Tensor<T>&, const SteKind&, BinaryMode,    \
                                         ConvGeometry, BinaryConvCache<T>&);                               \
  template BinaryConvGrads<T> binary_conv_backward(const Tensor<T>&, const BinaryConvCache<T>&);           \
  template Tensor<T> uniform_fan_in(const Shape&, std::mt19937_64&);                                       \
  template struct BiSRConvParams<T>;                                                                       \
  template struct LayerGrads<T>;                                                                           \
  template Tensor<T> bisr_conv_forward(const Tensor<T>&, const BiSRConvParams<T>&, const SteKind&,         \
                                       BinaryMode, BiSRConvCache<T>&);                                     \
  template LayerGrads<T> bisr_conv_backward(const Tensor<T>&, const BiSRConvCache<T>&, const SteKind&);

BISR_INSTANTIATE_LAYERS(float)
BISR_INSTANTIATE_LAYERS(double)

#undef BISR_INSTANTIATE_LAYERS

}  // namespace bisr

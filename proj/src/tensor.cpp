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

#include "bisr/tensor.hpp"

#include <cmath>

namespace bisr {

std::string Shape::str() const {
  return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " + std::to_string(h) + ", " + std::to_string(w) +
         ")";
}

template <typename T>
Tensor<T>& Tensor<T>::operator+=(const Tensor& other) {
  if (other.shape_ != shape_) throw DimensionError("add " + shape_.str() + " vs " + other.shape_.str());
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

template <typename T>
Tensor<T>& Tensor<T>::operator-=(const Tensor& other) {
  if (other.shape_ != shape_) throw DimensionError("sub " + shape_.str() + " vs " + other.shape_.str());
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

template <typename T>
Tensor<T>& Tensor<T>::operator*=(T s) {
  for (auto& v : data_) v *= s;
  return *this;
}

template <typename T>
bool all_finite(const Tensor<T>& t) {
  for (T v : t.data()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template <typename T>
std::vector<T> channel_sums(const Tensor<T>& t) {
  std::vector<T> out(t.c(), T(0));
  const std::size_t hw = t.shape().plane();
  for (std::size_t b = 0; b < t.n(); ++b) {
    for (std::size_t ch = 0; ch < t.c(); ++ch) {
      const T* p = t.plane(b, ch);
      T acc = 0;
      for (std::size_t i = 0; i < hw; ++i) acc += p[i];
      out[ch] += acc;
    }
  }
  return out;
}

std::size_t conv_out_size(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad) {
  if (stride == 0) throw ArgumentError("stride must be positive");
  if (in + 2 * pad < k) {
    throw DimensionError("kernel " + std::to_string(k) + " larger than padded input " + std::to_string(in + 2 * pad));
  }
  return (in + 2 * pad - k) / stride + 1;
}

namespace {

template <typename T>
void check_conv_args(const Tensor<T>& input, const Tensor<T>& weight, std::span<const T> bias) {
  if (weight.h() != weight.w()) throw DimensionError("kernel must be square, got " + weight.shape().str());
  if (weight.c() != input.c()) {
    throw DimensionError("input has " + std::to_string(input.c()) + " channels, kernel expects " +
                         std::to_string(weight.c()));
  }
  if (!bias.empty() && bias.size() != weight.n()) {
    throw DimensionError("bias length " + std::to_string(bias.size()) + " vs " + std::to_string(weight.n()) +
                         " output channels");
  }
}

// Copy of `input` surrounded by `pad` rows/columns of `pad_value`.
template <typename T>
Tensor<T> pad_input(const Tensor<T>& input, std::size_t pad, T pad_value) {
  if (pad == 0) return input;
  const Shape s = input.shape();
  Tensor<T> out(Shape{s.n, s.c, s.h + 2 * pad, s.w + 2 * pad}, pad_value);
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t ch = 0; ch < s.c; ++ch) {
      const T* src = input.plane(b, ch);
      T* dst = out.plane(b, ch);
      for (std::size_t y = 0; y < s.h; ++y) {
        std::copy(src + y * s.w, src + (y + 1) * s.w, dst + (y + pad) * out.w() + pad);
      }
    }
  }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> conv2d_ref(const Tensor<T>& input, const Tensor<T>& weight, std::span<const T> bias, ConvGeometry geom,
                     T pad_value) {
  check_conv_args(input, weight, bias);
  const std::size_t k = weight.h();
  const std::size_t oh = conv_out_size(input.h(), k, geom.stride, geom.pad);
  const std::size_t ow = conv_out_size(input.w(), k, geom.stride, geom.pad);
  const std::size_t c_out = weight.n();
  Tensor<T> out(Shape{input.n(), c_out, oh, ow});
  const auto ih = static_cast<long>(input.h());
  const auto iw = static_cast<long>(input.w());
  for (std::size_t b = 0; b < input.n(); ++b) {
    for (std::size_t co = 0; co < c_out; ++co) {
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          T acc = bias.empty() ? T(0) : bias[co];
          for (std::size_t ci = 0; ci < input.c(); ++ci) {
            for (std::size_t ky = 0; ky < k; ++ky) {
              for (std::size_t kx = 0; kx < k; ++kx) {
                const long y = static_cast<long>(oy * geom.stride + ky) - static_cast<long>(geom.pad);
                const long x = static_cast<long>(ox * geom.stride + kx) - static_cast<long>(geom.pad);
                const T v = (y < 0 || y >= ih || x < 0 || x >= iw)
                                ? pad_value
                                : input.at(b, ci, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
                acc += weight.at(co, ci, ky, kx) * v;
              }
            }
          }
          out.at(b, co, oy, ox) = acc;
        }
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, std::span<const T> bias, ConvGeometry geom,
                 T pad_value) {
  check_conv_args(input, weight, bias);
  const std::size_t k = weight.h();
  const std::size_t stride = geom.stride;
  const std::size_t oh = conv_out_size(input.h(), k, stride, geom.pad);
  const std::size_t ow = conv_out_size(input.w(), k, stride, geom.pad);
  const std::size_t c_in = input.c();
  const std::size_t c_out = weight.n();
  const Tensor<T> padded = pad_input(input, geom.pad, pad_value);
  const std::size_t pw = padded.w();
  Tensor<T> out(Shape{input.n(), c_out, oh, ow});
  const auto jobs = static_cast<long>(input.n() * c_out);
#pragma omp parallel for schedule(static)
  for (long job = 0; job < jobs; ++job) {
    const std::size_t b = static_cast<std::size_t>(job) / c_out;
    const std::size_t co = static_cast<std::size_t>(job) % c_out;
    T* dst = out.plane(b, co);
    std::fill(dst, dst + oh * ow, bias.empty() ? T(0) : bias[co]);
    for (std::size_t ci = 0; ci < c_in; ++ci) {
      const T* src = padded.plane(b, ci);
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          const T wv = weight.at(co, ci, ky, kx);
          for (std::size_t oy = 0; oy < oh; ++oy) {
            const T* row = src + (oy * stride + ky) * pw + kx;
            T* orow = dst + oy * ow;
            if (stride == 1) {
              for (std::size_t ox = 0; ox < ow; ++ox) orow[ox] += wv * row[ox];
            } else {
              for (std::size_t ox = 0; ox < ow; ++ox) orow[ox] += wv * row[ox * stride];
            }
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> conv2d_backward_input(const Tensor<T>& grad_out, const Tensor<T>& weight, const Shape& input_shape,
                                ConvGeometry geom) {
  const std::size_t k = weight.h();
  const std::size_t stride = geom.stride;
  const std::size_t oh = conv_out_size(input_shape.h, k, stride, geom.pad);
  const std::size_t ow = conv_out_size(input_shape.w, k, stride, geom.pad);
  if (grad_out.shape() != Shape{input_shape.n, weight.n(), oh, ow} || weight.c() != input_shape.c) {
    throw DimensionError("conv input gradient: grad " + grad_out.shape().str() + ", kernel " + weight.shape().str() +
                         ", input " + input_shape.str());
  }
  const std::size_t pad = geom.pad;
  const std::size_t ph = input_shape.h + 2 * pad;
  const std::size_t pw = input_shape.w + 2 * pad;
  const std::size_t c_in = input_shape.c;
  const std::size_t c_out = weight.n();
  Tensor<T> grad_in(input_shape);
  const auto jobs = static_cast<long>(input_shape.n * c_in);
#pragma omp parallel for schedule(static)
  for (long job = 0; job < jobs; ++job) {
    const std::size_t b = static_cast<std::size_t>(job) / c_in;
    const std::size_t ci = static_cast<std::size_t>(job) % c_in;
    std::vector<T> gp(ph * pw, T(0));
    for (std::size_t co = 0; co < c_out; ++co) {
      const T* g = grad_out.plane(b, co);
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          const T wv = weight.at(co, ci, ky, kx);
          for (std::size_t oy = 0; oy < oh; ++oy) {
            T* row = gp.data() + (oy * stride + ky) * pw + kx;
            const T* grow = g + oy * ow;
            if (stride == 1) {
              for (std::size_t ox = 0; ox < ow; ++ox) row[ox] += wv * grow[ox];
            } else {
              for (std::size_t ox = 0; ox < ow; ++ox) row[ox * stride] += wv * grow[ox];
            }
          }
        }
      }
    }
    T* dst = grad_in.plane(b, ci);
    for (std::size_t y = 0; y < input_shape.h; ++y) {
      std::copy(gp.data() + (y + pad) * pw + pad, gp.data() + (y + pad) * pw + pad + input_shape.w,
                dst + y * input_shape.w);
    }
  }
  return grad_in;
}

namespace {

// Fixed lane split so the compiler can vectorize without reassociating.
template <typename T>
T row_dot(const T* g, const T* x, std::size_t n, std::size_t stride) {
  constexpr std::size_t kLanes = 8;
  T lanes[kLanes] = {};
  std::size_t i = 0;
  if (stride == 1) {
    for (; i + kLanes <= n; i += kLanes) {
      for (std::size_t j = 0; j < kLanes; ++j) lanes[j] += g[i + j] * x[i + j];
    }
  }
  T tail = 0;
  for (; i < n; ++i) tail += g[i] * x[i * stride];
  T acc = tail;
  for (std::size_t j = 0; j < kLanes; ++j) acc += lanes[j];
  return acc;
}

}  // namespace

template <typename T>
Tensor<T> conv2d_backward_weight(const Tensor<T>& grad_out, const Tensor<T>& input, std::size_t k,
                                 ConvGeometry geom, T pad_value) {
  const std::size_t stride = geom.stride;
  const std::size_t oh = conv_out_size(input.h(), k, stride, geom.pad);
  const std::size_t ow = conv_out_size(input.w(), k, stride, geom.pad);
  if (grad_out.n() != input.n() || grad_out.h() != oh || grad_out.w() != ow) {
    throw DimensionError("conv weight gradient: grad " + grad_out.shape().str() + " vs input " +
                         input.shape().str());
  }
  const std::size_t c_in = input.c();
  const std::size_t c_out = grad_out.c();
  const Tensor<T> padded = pad_input(input, geom.pad, pad_value);
  const std::size_t pw = padded.w();
  Tensor<T> grad_w(Shape{c_out, c_in, k, k});
  const auto jobs = static_cast<long>(c_out * c_in);
#pragma omp parallel for schedule(static)
  for (long job = 0; job < jobs; ++job) {
    const std::size_t co = static_cast<std::size_t>(job) / c_in;
    const std::size_t ci = static_cast<std::size_t>(job) % c_in;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        T acc = 0;
        for (std::size_t b = 0; b < input.n(); ++b) {
          const T* g = grad_out.plane(b, co);
          const T* src = padded.plane(b, ci);
          for (std::size_t oy = 0; oy < oh; ++oy) {
            const T* row = src + (oy * stride + ky) * pw + kx;
            const T* grow = g + oy * ow;
            acc += row_dot(grow, row, ow, stride);
          }
        }
        grad_w.at(co, ci, ky, kx) = acc;
      }
    }
  }
  return grad_w;
}

template <typename T>
Tensor<T> avg_pool2x2(const Tensor<T>& input) {
  if (input.h() % 2 != 0 || input.w() % 2 != 0) {
    throw DimensionError("avg_pool2x2 needs even spatial dims, got " + input.shape().str());
  }
  const std::size_t oh = input.h() / 2;
  const std::size_t ow = input.w() / 2;
  Tensor<T> out(Shape{input.n(), input.c(), oh, ow});
  for (std::size_t b = 0; b < input.n(); ++b) {
    for (std::size_t ch = 0; ch < input.c(); ++ch) {
      const T* src = input.plane(b, ch);
      T* dst = out.plane(b, ch);
      for (std::size_t y = 0; y < oh; ++y) {
        const T* r0 = src + 2 * y * input.w();
        const T* r1 = r0 + input.w();
        for (std::size_t x = 0; x < ow; ++x) {
          dst[y * ow + x] = T(0.25) * (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]);
        }
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> avg_pool2x2_backward(const Tensor<T>& grad_out) {
  const std::size_t ih = grad_out.h() * 2;
  const std::size_t iw = grad_out.w() * 2;
  Tensor<T> grad_in(Shape{grad_out.n(), grad_out.c(), ih, iw});
  for (std::size_t b = 0; b < grad_out.n(); ++b) {
    for (std::size_t ch = 0; ch < grad_out.c(); ++ch) {
      const T* g = grad_out.plane(b, ch);
      T* dst = grad_in.plane(b, ch);
      for (std::size_t y = 0; y < ih; ++y) {
        for (std::size_t x = 0; x < iw; ++x) dst[y * iw + x] = T(0.25) * g[(y / 2) * grad_out.w() + x / 2];
      }
    }
  }
  return grad_in;
}

namespace {

// Source taps for one axis of the 2x bilinear upscale.
struct Taps {
  std::size_t lo;
  std::size_t hi;
  double frac;
};

std::vector<Taps> up2_taps(std::size_t in) {
  std::vector<Taps> taps(2 * in);
  for (std::size_t i = 0; i < 2 * in; ++i) {
    double src = (static_cast<double>(i) + 0.5) / 2.0 - 0.5;
    if (src < 0) src = 0;
    auto lo = static_cast<std::size_t>(std::floor(src));
    if (lo > in - 1) lo = in - 1;
    const std::size_t hi = std::min(lo + 1, in - 1);
    taps[i] = Taps{lo, hi, src - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

template <typename T>
Tensor<T> bilinear_up2(const Tensor<T>& input) {
  if (input.h() == 0 || input.w() == 0) throw DimensionError("bilinear_up2 on empty plane " + input.shape().str());
  const auto ty = up2_taps(input.h());
  const auto tx = up2_taps(input.w());
  const std::size_t oh = 2 * input.h();
  const std::size_t ow = 2 * input.w();
  Tensor<T> out(Shape{input.n(), input.c(), oh, ow});
  for (std::size_t b = 0; b < input.n(); ++b) {
    for (std::size_t ch = 0; ch < input.c(); ++ch) {
      const T* src = input.plane(b, ch);
      T* dst = out.plane(b, ch);
      for (std::size_t y = 0; y < oh; ++y) {
        const T fy = static_cast<T>(ty[y].frac);
        const T* r0 = src + ty[y].lo * input.w();
        const T* r1 = src + ty[y].hi * input.w();
        for (std::size_t x = 0; x < ow; ++x) {
          const T fx = static_cast<T>(tx[x].frac);
          const T top = (T(1) - fx) * r0[tx[x].lo] + fx * r0[tx[x].hi];
          const T bot = (T(1) - fx) * r1[tx[x].lo] + fx * r1[tx[x].hi];
          dst[y * ow + x] = (T(1) - fy) * top + fy * bot;
        }
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> bilinear_up2_backward(const Tensor<T>& grad_out) {
  if (grad_out.h() % 2 != 0 || grad_out.w() % 2 != 0) {
    throw DimensionError("bilinear_up2 gradient needs even dims, got " + grad_out.shape().str());
  }
  const std::size_t ih = grad_out.h() / 2;
  const std::size_t iw = grad_out.w() / 2;
  const auto ty = up2_taps(ih);
  const auto tx = up2_taps(iw);
  Tensor<T> grad_in(Shape{grad_out.n(), grad_out.c(), ih, iw});
  for (std::size_t b = 0; b < grad_out.n(); ++b) {
    for (std::size_t ch = 0; ch < grad_out.c(); ++ch) {
      const T* g = grad_out.plane(b, ch);
      T* dst = grad_in.plane(b, ch);
      for (std::size_t y = 0; y < grad_out.h(); ++y) {
        const T fy = static_cast<T>(ty[y].frac);
        T* r0 = dst + ty[y].lo * iw;
        T* r1 = dst + ty[y].hi * iw;
        for (std::size_t x = 0; x < grad_out.w(); ++x) {
          const T fx = static_cast<T>(tx[x].frac);
          const T v = g[y * grad_out.w() + x];
          r0[tx[x].lo] += (T(1) - fy) * (T(1) - fx) * v;
          r0[tx[x].hi] += (T(1) - fy) * fx * v;
          r1[tx[x].lo] += fy * (T(1) - fx) * v;
          r1[tx[x].hi] += fy * fx * v;
        }
      }
    }
  }
  return grad_in;
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w()) {
    throw DimensionError("concat " + a.shape().str() + " with " + b.shape().str());
  }
  Tensor<T> out(Shape{a.n(), a.c() + b.c(), a.h(), a.w()});
  const std::size_t hw = a.shape().plane();
  for (std::size_t i = 0; i < a.n(); ++i) {
    std::copy(a.plane(i, 0), a.plane(i, 0) + a.c() * hw, out.plane(i, 0));
    std::copy(b.plane(i, 0), b.plane(i, 0) + b.c() * hw, out.plane(i, a.c()));
  }
  return out;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& x, std::size_t at) {
  if (at == 0 || at >= x.c()) {
    throw DimensionError("split at " + std::to_string(at) + " of " + std::to_string(x.c()) + " channels");
  }
  const std::size_t hw = x.shape().plane();
  Tensor<T> a(Shape{x.n(), at, x.h(), x.w()});
  Tensor<T> b(Shape{x.n(), x.c() - at, x.h(), x.w()});
  for (std::size_t i = 0; i < x.n(); ++i) {
    std::copy(x.plane(i, 0), x.plane(i, 0) + at * hw, a.plane(i, 0));
    std::copy(x.plane(i, at), x.plane(i, at) + b.c() * hw, b.plane(i, 0));
  }
  return {std::move(a), std::move(b)};
}

#define BISR_INSTANTIATE_TENSOR(T)                                                                               \
  template class Tensor<T>;                                                                                      \
  template bool all_finite(const Tensor<T>&);                                                                    \
  template std::vector<T> channel_sums(const Tensor<T>&);                                                        \
  template Tensor<T> conv2d_ref(const Tensor<T>&, const Tensor<T>&, std::span<const T>, ConvGeometry, T);        \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, std::span<const T>, ConvGeometry, T);            \
  template Tensor<T> conv2d_backward_input(const Tensor<T>&, const Tensor<T>&, const Shape&, ConvGeometry);      \
  template Tensor<T> conv2d_backward_weight(const Tensor<T>&, const Tensor<T>&, std::size_t, ConvGeometry, T);   \
  template Tensor<T> avg_pool2x2(const Tensor<T>&);                                                              \
  template Tensor<T> avg_pool2x2_backward(const Tensor<T>&);                                                     \
  template Tensor<T> bilinear_up2(const Tensor<T>&);                                                             \
  template Tensor<T> bilinear_up2_backward(const Tensor<T>&);                                                    \
  template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);                                        \
  template std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>&, std::size_t);

BISR_INSTANTIATE_TENSOR(float)
BISR_INSTANTIATE_TENSOR(double)

#undef BISR_INSTANTIATE_TENSOR

}  // namespace bisr

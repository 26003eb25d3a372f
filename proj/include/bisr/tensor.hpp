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

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bisr/errors.hpp"

namespace bisr {

struct Shape {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t size() const { return n * c * h * w; }
  std::size_t plane() const { return h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Dense (batch, channel, row, column) array stored row-major.
///
/// `Tensor<float>` is the working-precision carrier used for training and
/// inference; `Tensor<double>` is the checking precision used by the
/// gradient-check harnesses. Every kernel below is instantiated for both.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0)) : shape_(shape), data_(shape.size(), fill) {}
  Tensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size()) {
      throw DimensionError("data length " + std::to_string(data_.size()) + " does not match shape " + shape_.str());
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t n() const { return shape_.n; }
  std::size_t c() const { return shape_.c; }
  std::size_t h() const { return shape_.h; }
  std::size_t w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::size_t index(std::size_t b, std::size_t ch, std::size_t y, std::size_t x) const {
    return ((b * shape_.c + ch) * shape_.h + y) * shape_.w + x;
  }
  T& at(std::size_t b, std::size_t ch, std::size_t y, std::size_t x) { return data_[index(b, ch, y, x)]; }
  const T& at(std::size_t b, std::size_t ch, std::size_t y, std::size_t x) const {
    return data_[index(b, ch, y, x)];
  }

  T* plane(std::size_t b, std::size_t ch) { return data_.data() + (b * shape_.c + ch) * shape_.plane(); }
  const T* plane(std::size_t b, std::size_t ch) const {
    return data_.data() + (b * shape_.c + ch) * shape_.plane();
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(T s);

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

 private:
  Shape shape_;
  std::vector<T> data_;
};

using DenseTensor = Tensor<float>;
using CheckTensor = Tensor<double>;

template <typename T>
Tensor<T> operator+(Tensor<T> a, const Tensor<T>& b) {
  a += b;
  return a;
}
template <typename T>
Tensor<T> operator-(Tensor<T> a, const Tensor<T>& b) {
  a -= b;
  return a;
}
template <typename T>
Tensor<T> operator*(Tensor<T> a, T s) {
  a *= s;
  return a;
}

/// True when every element is finite.
template <typename T>
bool all_finite(const Tensor<T>& t);

/// Reduces over every axis except `c`; returns one value per channel.
template <typename T>
std::vector<T> channel_sums(const Tensor<T>& t);

// ---------------------------------------------------------------------------
// Convolution. Weights are laid out [c_out, c_in, k, k] as a Tensor whose
// shape is (c_out, c_in, k, k). `bias` may be empty.

struct ConvGeometry {
  std::size_t stride = 1;
  std::size_t pad = 0;
};

std::size_t conv_out_size(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad);

/// Serial cross-correlation, the oracle for every other convolution kernel.
/// Padding taps read `pad_value`. Per output element the accumulation order is
/// bias, then taps in (c_in, row, col) order.
template <typename T>
Tensor<T> conv2d_ref(const Tensor<T>& input, const Tensor<T>& weight, std::span<const T> bias, ConvGeometry geom,
                     T pad_value);

/// Parallel convolution with the same per-element accumulation order as
/// conv2d_ref, so results are bitwise identical to it.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, std::span<const T> bias, ConvGeometry geom,
                 T pad_value);

/// Gradient of conv2d with respect to its input (padding taps are constants).
template <typename T>
Tensor<T> conv2d_backward_input(const Tensor<T>& grad_out, const Tensor<T>& weight, const Shape& input_shape,
                                ConvGeometry geom);

/// Gradient of conv2d with respect to its weights.
template <typename T>
Tensor<T> conv2d_backward_weight(const Tensor<T>& grad_out, const Tensor<T>& input, std::size_t k,
                                 ConvGeometry geom, T pad_value);

// ---------------------------------------------------------------------------
// Spatial resampling.

template <typename T>
Tensor<T> avg_pool2x2(const Tensor<T>& input);
template <typename T>
Tensor<T> avg_pool2x2_backward(const Tensor<T>& grad_out);

/// 2x bilinear upscaling, align-corners-false: output pixel i samples the
/// input at (i + 0.5) / 2 - 0.5, clamped to the valid range.
template <typename T>
Tensor<T> bilinear_up2(const Tensor<T>& input);
template <typename T>
Tensor<T> bilinear_up2_backward(const Tensor<T>& grad_out);

// ---------------------------------------------------------------------------
// Channel plumbing.

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& x, std::size_t at);

// ---------------------------------------------------------------------------
// ".hst" files: "HST1", four little-endian uint32 (n, c, h, w), then n*c*h*w
// little-endian float32 values in row-major order.

void write_hst(const std::string& path, const DenseTensor& t);
DenseTensor read_hst(const std::string& path);
std::vector<unsigned char> encode_hst(const DenseTensor& t);
DenseTensor decode_hst(std::span<const unsigned char> bytes);

}  // namespace bisr

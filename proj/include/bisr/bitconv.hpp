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

#include <cstdint>
#include <span>
#include <vector>

#include "bisr/tensor.hpp"

namespace bisr {

/// Bit-packed +/-1 tensor. Every spatial row of every channel starts on a
/// word boundary; bit j of word q holds column 64q + j (1 <-> +1, 0 <-> -1).
/// Bits past the row width are don't-care and are masked out by every reader.
class BitTensor {
 public:
  using Word = std::uint64_t;
  static constexpr std::size_t kWordBits = 64;

  BitTensor() = default;
  explicit BitTensor(Shape shape);

  const Shape& shape() const { return shape_; }
  std::size_t words_per_row() const { return words_per_row_; }
  std::size_t valid_bits() const { return shape_.w; }
  std::span<const Word> words() const { return words_; }
  std::span<Word> words() { return words_; }

  const Word* row(std::size_t b, std::size_t ch, std::size_t y) const {
    return words_.data() + ((b * shape_.c + ch) * shape_.h + y) * words_per_row_;
  }
  Word* row(std::size_t b, std::size_t ch, std::size_t y) {
    return words_.data() + ((b * shape_.c + ch) * shape_.h + y) * words_per_row_;
  }
  bool bit(std::size_t b, std::size_t ch, std::size_t y, std::size_t x) const {
    return (row(b, ch, y)[x / kWordBits] >> (x % kWordBits)) & 1u;
  }

  /// Bytes of packed payload versus the float32 dense equivalent.
  std::size_t packed_bytes() const { return words_.size() * sizeof(Word); }
  std::size_t dense_bytes() const { return shape_.size() * sizeof(float); }

 private:
  Shape shape_;
  std::size_t words_per_row_ = 0;
  std::vector<Word> words_;
};

/// Packs a tensor whose elements are all exactly +1 or -1.
template <typename T>
BitTensor pack(const Tensor<T>& x);

template <typename T>
Tensor<T> unpack(const BitTensor& b);

/// Real dot product of two +/-1 vectors stored as bit segments:
/// 2 * popcount(XNOR(a, b) over the first n bits) - n.
std::int64_t xnor_popcount_dot(std::span<const BitTensor::Word> a, std::span<const BitTensor::Word> b,
                               std::size_t n);

/// Weights repacked so that the k*k*c_in taps of one output channel form one
/// contiguous bit stream in (c_in, row, col) order.
class BitKernel {
 public:
  explicit BitKernel(const BitTensor& w);

  std::size_t c_out() const { return c_out_; }
  std::size_t c_in() const { return c_in_; }
  std::size_t k() const { return k_; }
  std::size_t taps() const { return c_in_ * k_ * k_; }
  std::size_t words_per_patch() const { return words_per_patch_; }
  std::span<const BitTensor::Word> stream(std::size_t co) const {
    return {words_.data() + co * words_per_patch_, words_per_patch_};
  }

 private:
  std::size_t c_out_ = 0;
  std::size_t c_in_ = 0;
  std::size_t k_ = 0;
  std::size_t words_per_patch_ = 0;
  std::vector<BitTensor::Word> words_;
};

/// XNOR/popcount convolution of packed activations with packed weights.
/// Padding taps are -1 (bit 0). Output is `scale` times the exact integer
/// correlation, i.e. conv2d_ref(unpack(x), unpack(w), {}, geom, -1) * scale.
/// Parallel over (batch, output row).
template <typename T>
Tensor<T> bit_conv2d(const BitTensor& x, const BitKernel& w, T scale, ConvGeometry geom);

template <typename T>
Tensor<T> bit_conv2d(const BitTensor& x, const BitTensor& w, T scale, ConvGeometry geom) {
  return bit_conv2d(x, BitKernel(w), scale, geom);
}

/// Serial tap-by-tap reference of bit_conv2d, kept for tests and benchmarks.
template <typename T>
Tensor<T> bit_conv2d_serial(const BitTensor& x, const BitTensor& w, T scale, ConvGeometry geom);

}  // namespace bisr

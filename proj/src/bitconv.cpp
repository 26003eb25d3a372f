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

#include <algorithm>
#include <bit>

namespace bisr {

namespace {

using Word = BitTensor::Word;
constexpr std::size_t kWordBits = BitTensor::kWordBits;

constexpr Word low_mask(std::size_t n) { return n >= kWordBits ? ~Word(0) : ((Word(1) << n) - 1); }

// `count` (<= 64) valid bits of a packed row starting at column `pos`.
Word read_bits(const Word* row, std::size_t pos, std::size_t count) {
  const std::size_t q = pos / kWordBits;
  const std::size_t off = pos % kWordBits;
  Word v = row[q] >> off;
  if (off != 0 && off + count > kWordBits) v |= row[q + 1] << (kWordBits - off);
  return v & low_mask(count);
}

// `len` bits of a row of `width` columns starting at signed column `start`;
// columns outside [0, width) read as 0 (the -1 padding value).
Word window_bits(const Word* row, std::size_t width, long start, std::size_t len) {
  const long lo = std::max(start, 0L);
  const long hi = std::min(start + static_cast<long>(len), static_cast<long>(width));
  if (lo >= hi) return 0;
  const Word v = read_bits(row, static_cast<std::size_t>(lo), static_cast<std::size_t>(hi - lo));
  return v << (lo - start);
}

void put_bits(Word* stream, std::size_t offset, Word v, std::size_t len) {
  const std::size_t q = offset / kWordBits;
  const std::size_t r = offset % kWordBits;
  stream[q] |= v << r;
  if (r != 0 && r + len > kWordBits) stream[q + 1] |= v >> (kWordBits - r);
}

std::size_t words_for(std::size_t bits) { return (bits + kWordBits - 1) / kWordBits; }

}  // namespace

BitTensor::BitTensor(Shape shape)
    : shape_(shape), words_per_row_(words_for(shape.w)), words_(shape.n * shape.c * shape.h * words_per_row_, 0) {}

template <typename T>
BitTensor pack(const Tensor<T>& x) {
  BitTensor out(x.shape());
  const Shape s = x.shape();
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t ch = 0; ch < s.c; ++ch) {
      const T* src = x.plane(b, ch);
      for (std::size_t y = 0; y < s.h; ++y) {
        Word* dst = out.row(b, ch, y);
        for (std::size_t i = 0; i < s.w; ++i) {
          const T v = src[y * s.w + i];
          if (v == T(1)) {
            dst[i / kWordBits] |= Word(1) << (i % kWordBits);
          } else if (v != T(-1)) {
            throw DomainError("pack expects +1/-1 elements, found " + std::to_string(v) + " at (" +
                              std::to_string(b) + ", " + std::to_string(ch) + ", " + std::to_string(y) + ", " +
                              std::to_string(i) + ")");
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> unpack(const BitTensor& bits) {
  const Shape s = bits.shape();
  Tensor<T> out(s);
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t ch = 0; ch < s.c; ++ch) {
      T* dst = out.plane(b, ch);
      for (std::size_t y = 0; y < s.h; ++y) {
        for (std::size_t i = 0; i < s.w; ++i) dst[y * s.w + i] = bits.bit(b, ch, y, i) ? T(1) : T(-1);
      }
    }
  }
  return out;
}

std::int64_t xnor_popcount_dot(std::span<const Word> a, std::span<const Word> b, std::size_t n) {
  if (n > a.size() * kWordBits || n > b.size() * kWordBits) {
    throw ArgumentError("dot length " + std::to_string(n) + " exceeds segment of " +
                        std::to_string(std::min(a.size(), b.size()) * kWordBits) + " bits");
  }
  const std::size_t full = n / kWordBits;
  std::int64_t agree = 0;
  for (std::size_t i = 0; i < full; ++i) agree += std::popcount(~(a[i] ^ b[i]));
  const std::size_t rest = n % kWordBits;
  if (rest != 0) agree += std::popcount(~(a[full] ^ b[full]) & low_mask(rest));
  return 2 * agree - static_cast<std::int64_t>(n);
}

BitKernel::BitKernel(const BitTensor& w)
    : c_out_(w.shape().n), c_in_(w.shape().c), k_(w.shape().h), words_per_patch_(words_for(taps())) {
  if (w.shape().h != w.shape().w) throw DimensionError("bit kernel must be square, got " + w.shape().str());
  words_.assign(c_out_ * words_per_patch_, 0);
  for (std::size_t co = 0; co < c_out_; ++co) {
    Word* dst = words_.data() + co * words_per_patch_;
    for (std::size_t ci = 0; ci < c_in_; ++ci) {
      for (std::size_t ky = 0; ky < k_; ++ky) {
        put_bits(dst, (ci * k_ + ky) * k_, read_bits(w.row(co, ci, ky), 0, k_), k_);
      }
    }
  }
}

template <typename T>
Tensor<T> bit_conv2d(const BitTensor& x, const BitKernel& w, T scale, ConvGeometry geom) {
  const Shape s = x.shape();
  if (w.c_in() != s.c) {
    throw DimensionError("bit conv input has " + std::to_string(s.c) + " channels, kernel expects " +
                         std::to_string(w.c_in()));
  }
  const std::size_t k = w.k();
  const std::size_t oh = conv_out_size(s.h, k, geom.stride, geom.pad);
  const std::size_t ow = conv_out_size(s.w, k, geom.stride, geom.pad);
  const std::size_t wpp = w.words_per_patch();
  const std::size_t taps = w.taps();
  const std::size_t c_out = w.c_out();
  const auto pad = static_cast<long>(geom.pad);
  const auto stride = static_cast<long>(geom.stride);
  Tensor<T> out(Shape{s.n, c_out, oh, ow});
  const auto rows = static_cast<long>(s.n * oh);
#pragma omp parallel
  {
    std::vector<Word> patches(ow * wpp);
#pragma omp for schedule(static)
    for (long job = 0; job < rows; ++job) {
      const std::size_t b = static_cast<std::size_t>(job) / oh;
      const std::size_t oy = static_cast<std::size_t>(job) % oh;
      std::fill(patches.begin(), patches.end(), Word(0));
      for (std::size_t ci = 0; ci < s.c; ++ci) {
        for (std::size_t ky = 0; ky < k; ++ky) {
          const long iy = static_cast<long>(oy) * stride + static_cast<long>(ky) - pad;
          if (iy < 0 || iy >= static_cast<long>(s.h)) continue;
          const Word* row = x.row(b, ci, static_cast<std::size_t>(iy));
          const std::size_t offset = (ci * k + ky) * k;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const long ix = static_cast<long>(ox) * stride - pad;
            put_bits(patches.data() + ox * wpp, offset, window_bits(row, s.w, ix, k), k);
          }
        }
      }
      for (std::size_t co = 0; co < c_out; ++co) {
        const auto wstream = w.stream(co);
        T* dst = out.plane(b, co) + oy * ow;
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const std::span<const Word> patch(patches.data() + ox * wpp, wpp);
          dst[ox] = scale * static_cast<T>(xnor_popcount_dot(patch, wstream, taps));
        }
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> bit_conv2d_serial(const BitTensor& x, const BitTensor& w, T scale, ConvGeometry geom) {
  const Shape s = x.shape();
  const Shape ws = w.shape();
  if (ws.c != s.c || ws.h != ws.w) {
    throw DimensionError("bit conv input " + s.str() + " incompatible with kernel " + ws.str());
  }
  const std::size_t k = ws.h;
  const std::size_t oh = conv_out_size(s.h, k, geom.stride, geom.pad);
  const std::size_t ow = conv_out_size(s.w, k, geom.stride, geom.pad);
  Tensor<T> out(Shape{s.n, ws.n, oh, ow});
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t co = 0; co < ws.n; ++co) {
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          std::int64_t agree = 0;
          for (std::size_t ci = 0; ci < s.c; ++ci) {
            for (std::size_t ky = 0; ky < k; ++ky) {
              for (std::size_t kx = 0; kx < k; ++kx) {
                const long iy = static_cast<long>(oy * geom.stride + ky) - static_cast<long>(geom.pad);
                const long ix = static_cast<long>(ox * geom.stride + kx) - static_cast<long>(geom.pad);
                const bool inside = iy >= 0 && iy < static_cast<long>(s.h) && ix >= 0 && ix < static_cast<long>(s.w);
                const bool xb = inside && x.bit(b, ci, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
                agree += (xb == w.bit(co, ci, ky, kx)) ? 1 : 0;
              }
            }
          }
          const auto n = static_cast<std::int64_t>(s.c * k * k);
          out.at(b, co, oy, ox) = scale * static_cast<T>(2 * agree - n);
        }
      }
    }
  }
  return out;
}

template BitTensor pack(const Tensor<float>&);
template BitTensor pack(const Tensor<double>&);
template Tensor<float> unpack(const BitTensor&);
template Tensor<double> unpack(const BitTensor&);
template Tensor<float> bit_conv2d(const BitTensor&, const BitKernel&, float, ConvGeometry);
template Tensor<double> bit_conv2d(const BitTensor&, const BitKernel&, double, ConvGeometry);
template Tensor<float> bit_conv2d_serial(const BitTensor&, const BitTensor&, float, ConvGeometry);
template Tensor<double> bit_conv2d_serial(const BitTensor&, const BitTensor&, double, ConvGeometry);

}  // namespace bisr

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

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "bisr/tensor.hpp"

namespace bisr {

namespace {

constexpr char kMagic[4] = {'H', 'S', 'T', '1'};
constexpr std::size_t kHeaderBytes = 4 + 4 * 4;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(std::span<const unsigned char> bytes, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[off + i]) << (8 * i);
  return v;
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffu) throw DimensionError(std::string(what) + " does not fit the .hst header");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::vector<unsigned char> encode_hst(const DenseTensor& t) {
  std::vector<unsigned char> out;
  out.reserve(kHeaderBytes + 4 * t.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, checked_u32(t.n(), "n"));
  put_u32(out, checked_u32(t.c(), "c"));
  put_u32(out, checked_u32(t.h(), "h"));
  put_u32(out, checked_u32(t.w(), "w"));
  for (float v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

DenseTensor decode_hst(std::span<const unsigned char> bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw IoError("not an HST1 tensor");
  }
  const Shape shape{get_u32(bytes, 4), get_u32(bytes, 8), get_u32(bytes, 12), get_u32(bytes, 16)};
  if (bytes.size() != kHeaderBytes + 4 * shape.size()) {
    throw IoError("HST1 payload is " + std::to_string(bytes.size() - kHeaderBytes) + " bytes, shape " +
                  shape.str() + " needs " + std::to_string(4 * shape.size()));
  }
  std::vector<float> data(shape.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = std::bit_cast<float>(get_u32(bytes, kHeaderBytes + 4 * i));
  }
  return DenseTensor(shape, std::move(data));
}

void write_hst(const std::string& path, const DenseTensor& t) {
  const auto bytes = encode_hst(t);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("short write to " + path);
}

DenseTensor read_hst(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  try {
    return decode_hst(bytes);
  } catch (const IoError& e) {
    std::string msg = e.what();
    const std::string prefix = "I/O error: ";
    if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
    throw IoError(path + ": " + msg);
  }
}

}  // namespace bisr

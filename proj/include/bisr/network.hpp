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

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bisr/modules.hpp"

namespace bisr {

enum class ModuleStyle { kBinarized, kNormal };

std::string module_style_name(ModuleStyle style);
ModuleStyle parse_module_style(const std::string& name);

enum class Part { kEmbedding, kEncoder, kBottleneck, kDecoder, kMapping };

inline constexpr std::array<Part, 5> kAllParts = {Part::kEmbedding, Part::kEncoder, Part::kBottleneck,
                                                  Part::kDecoder, Part::kMapping};

const char* part_name(Part part);

struct NetworkConfig {
  std::size_t channels = 28;
  std::size_t n_wavelengths = 28;
  bool binarize_encoder = true;
  bool binarize_bottleneck = true;
  bool binarize_decoder = true;
  SteKind ste = SteKind::scaled_tanh(1.0);
  ModuleStyle module_style = ModuleStyle::kBinarized;
  bool redistribution = true;

  static NetworkConfig bisrnet() { return {}; }
  static NetworkConfig base() {
    NetworkConfig c;
    c.binarize_encoder = c.binarize_bottleneck = c.binarize_decoder = false;
    return c;
  }

  bool binarized(Part part) const;
  void set_binarized(Part part, bool on);
  /// Throws ConfigError.
  void validate() const;
};

/// 1-bit storage and compute relative to full precision.
inline constexpr std::size_t kParamsDivisor = 32;
inline constexpr std::size_t kOpsDivisor = 64;
/// OPs charged per convolution multiply-accumulate.
inline constexpr std::size_t kOpsPerMac = 1;

/// Round-to-nearest application of the 1-bit rules.
std::uint64_t binarized_params(std::uint64_t params_f);
std::uint64_t binarized_ops(std::uint64_t ops_f);

struct PartCost {
  Part part = Part::kEmbedding;
  bool binarized = false;
  std::uint64_t params_f = 0;
  std::uint64_t params_b = 0;
  std::uint64_t ops_f = 0;
  std::uint64_t ops_b = 0;

  /// What the part contributes to the totals.
  std::uint64_t params() const { return binarized ? params_b : params_f; }
  std::uint64_t ops() const { return binarized ? ops_b : ops_f; }
};

struct Accounting {
  std::size_t height = 0, width = 0;
  std::array<PartCost, 5> parts;
  std::uint64_t total_params = 0;
  std::uint64_t total_ops = 0;

  const PartCost& part(Part p) const { return parts[static_cast<std::size_t>(p)]; }
};

/// U-shaped reconstruction network:
///   embedding: conv1x1 (2N -> C), conv3x3 (C -> C)
///   encoder: block(C), down(C -> 2C), block(2C), down(2C -> 4C)
///   bottleneck: block(4C)
///   decoder: up(4C -> 2C), concat e2, fusion-down(4C -> 2C), block(2C),
///            up(2C -> C), concat e1, fusion-down(2C -> C), block(C)
///   + shallow feature, then mapping: conv3x3 (C -> C), conv1x1 (C -> N)
/// e1/e2 are the encoder block outputs before each downsample. Embedding and
/// mapping always stay full precision.
template <typename T>
class Network {
 public:
  Network(const NetworkConfig& cfg, std::uint64_t seed);

  const NetworkConfig& config() const { return cfg_; }

  /// `input` is (n, 2N, H, W) with H, W divisible by 4; returns (n, N, H, W).
  Tensor<T> forward(const Tensor<T>& input);
  /// Concatenates shifted measurement and shifted mask then runs forward.
  Tensor<T> forward(const Tensor<T>& h_shifted, const Tensor<T>& m_shifted);
  /// Accumulates parameter gradients; returns d/d(input). Requires a
  /// forward since the last backward.
  Tensor<T> backward(const Tensor<T>& grad_out);

  std::vector<ParamRef<T>> parameters();
  void zero_grad();
  /// Clamps tanh sharpness parameters to kMinAlpha.
  void clamp_constrained();
  void set_mode(BinaryMode mode);

  Accounting count(std::size_t height, std::size_t width) const;

 private:
  void check_input(const Shape& s) const;
  ModulePtr<T> make_block(std::size_t ch, bool binarize, const BinarySettings& bs, std::mt19937_64& rng);
  ModulePtr<T> make_reshape(ReshapeKind kind, std::size_t in_ch, bool binarize, const BinarySettings& bs,
                            std::mt19937_64& rng);

  NetworkConfig cfg_;
  Sequential<T> embedding_;
  ModulePtr<T> block1_, down1_, block2_, down2_;
  ModulePtr<T> bottleneck_;
  ModulePtr<T> up1_, fuse1_, block3_, up2_, fuse2_, block4_;
  Sequential<T> mapping_;
  Shape input_shape_;
  bool cached_ = false;
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace bisr
